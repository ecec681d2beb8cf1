"""
Adam with bias correction and the per-epoch exponential learning-rate decay.
"""

from dataclasses import dataclass
from typing import Iterable, List

import numpy as np

from .layers import Param


@dataclass
class AdamConfig:
    lr0: float = 0.001
    decay: float = 0.96
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def lr_schedule(epoch: int, lr0: float = 0.001, decay: float = 0.96) -> float:
    """Learning rate for a zero-based epoch: lr0 * decay ** epoch"""
    return lr0 * decay ** epoch


def adam_step(params: Iterable[Param], lr_t: float, step: int, beta1: float = 0.9,
              beta2: float = 0.999, eps: float = 1e-8) -> None:
    """
    One Adam update of every parameter from its populated gradient.

    Args:
        params: parameters whose `grad` holds this step's gradient
        lr_t: learning rate for this step
        step: 1-based update count used for bias correction
    """
    if step < 1:
        raise ValueError(f"Adam step count is 1-based, got {step}")
    correction1 = 1.0 - beta1 ** step
    correction2 = 1.0 - beta2 ** step
    for p in params:
        p.adam_m *= beta1
        p.adam_m += (1.0 - beta1) * p.grad
        p.adam_v *= beta2
        p.adam_v += (1.0 - beta2) * np.square(p.grad)
        m_hat = p.adam_m / correction1
        v_hat = p.adam_v / correction2
        p.value -= lr_t * m_hat / (np.sqrt(v_hat) + eps)


class Adam:
    """Stateful wrapper owning the update counter"""

    def __init__(self, params: List[Param], cfg: AdamConfig = None, step_count: int = 0):
        self.params = list(params)
        self.cfg = cfg or AdamConfig()
        self.t = int(step_count)

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()

    def lr_for_epoch(self, epoch: int) -> float:
        return lr_schedule(epoch, self.cfg.lr0, self.cfg.decay)

    def step(self, epoch: int) -> float:
        self.t += 1
        lr_t = self.lr_for_epoch(epoch)
        adam_step(self.params, lr_t, self.t, self.cfg.beta1, self.cfg.beta2, self.cfg.eps)
        return lr_t
