"""
Finite-difference verification of reverse-mode gradients.
"""

import logging
from typing import Callable, Dict, Optional, Sequence

import numpy as np

from .layers import Param

logger = logging.getLogger(__name__)

# loss_fn(True) zeroes the gradients, runs forward and backward and returns the loss;
# loss_fn(False) only runs forward. Both must be deterministic (frozen dropout masks).
LossFn = Callable[[bool], float]


def grad_check(loss_fn: LossFn, params: Sequence[Param], h: float = 1e-5,
               max_coords_per_param: Optional[int] = None, seed: int = 0,
               report: Optional[Dict[str, float]] = None) -> float:
    """
    Compare analytic gradients against central differences.

    The relative error of a coordinate is |a - n| / max(|a|, |n|, floor)
    where the floor is 1e-4 of the largest analytic gradient of the same
    parameter (plus 1e-12), so vanishing coordinates do not dominate.

    Args:
        loss_fn: see LossFn
        params: parameters to perturb
        h: finite-difference step
        max_coords_per_param: check a random subset of this size per parameter
        seed: seed for the coordinate subset
        report: optional dict receiving the max error per parameter name

    Returns:
        Maximum relative error over every checked coordinate
    """
    loss_fn(True)
    analytic = {id(p): p.grad.copy() for p in params}
    gen = np.random.default_rng(seed)
    worst = 0.0

    for p in params:
        grad = analytic[id(p)].reshape(-1)
        flat = p.value.reshape(-1)
        coords = np.arange(flat.size)
        if max_coords_per_param is not None and flat.size > max_coords_per_param:
            coords = np.sort(gen.choice(flat.size, size=max_coords_per_param, replace=False))
        floor = 1e-4 * float(np.max(np.abs(grad))) + 1e-12
        param_worst = 0.0
        for i in coords:
            original = flat[i]
            flat[i] = original + h
            plus = loss_fn(False)
            flat[i] = original - h
            minus = loss_fn(False)
            flat[i] = original
            numeric = (plus - minus) / (2.0 * h)
            err = abs(grad[i] - numeric) / max(abs(grad[i]), abs(numeric), floor)
            param_worst = max(param_worst, err)
        if report is not None:
            report[p.name] = param_worst
        logger.debug(f"grad check {p.name}: max relative error {param_worst:.3e} over {len(coords)} coords")
        worst = max(worst, param_worst)
    return worst
