"""
Layers of the lifting network with explicit reverse-mode gradients.

Every forward pass returns its output together with a per-call cache and
the matching backward pass consumes that cache. Parameters live in Param
objects owned by the layer, so two forward passes (the two siamese
branches) can run through the same layer and accumulate into the same
gradient buffers.
"""

import enum
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from ..errors import BatchTooSmall, ShapeMismatch
from ..types import LayerCache, Matrix
from .rng import RngStream

DEFAULT_LEAKY_SLOPE = 0.01
BN_EPSILON = 1e-5
BN_MOMENTUM = 0.1


class Mode(str, enum.Enum):
    TRAIN = "train"
    INFER = "infer"


@dataclass(eq=False)
class Param:
    """A learnable tensor with its gradient and Adam moment buffers"""

    name: str
    value: np.ndarray
    grad: np.ndarray = None
    adam_m: np.ndarray = None
    adam_v: np.ndarray = None

    def __post_init__(self):
        self.value = np.asarray(self.value, dtype=np.float64)
        if self.grad is None:
            self.grad = np.zeros_like(self.value)
        if self.adam_m is None:
            self.adam_m = np.zeros_like(self.value)
        if self.adam_v is None:
            self.adam_v = np.zeros_like(self.value)
        for buf in (self.grad, self.adam_m, self.adam_v):
            if buf.shape != self.value.shape:
                raise ShapeMismatch(f"param {self.name}: buffer shape {buf.shape} != {self.value.shape}")

    def zero_grad(self) -> None:
        self.grad.fill(0.0)

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.value.shape


def _as_batch(x: Matrix, name: str = "input") -> Matrix:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ShapeMismatch(f"{name} must be batch x features, got shape {x.shape}")
    return x


# Dense

def dense_forward(w: Param, b: Optional[Param], x: Matrix) -> Tuple[Matrix, LayerCache]:
    """y = x w + b, with x: batch x in, w: in x out, b: 1 x out (or no bias)"""
    x = _as_batch(x)
    if w.value.ndim != 2 or x.shape[1] != w.value.shape[0]:
        raise ShapeMismatch(f"dense {w.name}: input {x.shape} does not fit weights {w.value.shape}")
    if b is None:
        return x @ w.value, {"x": x}
    if b.value.shape != (1, w.value.shape[1]):
        raise ShapeMismatch(f"dense {b.name}: bias {b.value.shape} does not fit weights {w.value.shape}")
    return x @ w.value + b.value, {"x": x}


def dense_backward(w: Param, b: Optional[Param], cache: LayerCache, upstream: Matrix) -> Matrix:
    """Accumulate dL/dw and dL/db; return dL/dx"""
    upstream = _as_batch(upstream, "upstream")
    x = cache["x"]
    if upstream.shape != (x.shape[0], w.value.shape[1]):
        raise ShapeMismatch(f"dense {w.name}: upstream {upstream.shape} does not match output")
    w.grad += x.T @ upstream
    if b is not None:
        b.grad += upstream.sum(axis=0, keepdims=True)
    return upstream @ w.value.T


# Leaky ReLU

def leaky_relu(x: Matrix, slope: float = DEFAULT_LEAKY_SLOPE) -> Tuple[Matrix, LayerCache]:
    """y = x for x > 0, slope * x otherwise; slope 0 gives the plain ReLU"""
    if not 0.0 <= slope < 1.0:
        raise ValueError(f"leaky slope must be in [0, 1), got {slope}")
    x = np.asarray(x, dtype=np.float64)
    positive = x > 0
    return np.where(positive, x, slope * x), {"positive": positive, "slope": slope}


def leaky_relu_backward(cache: LayerCache, upstream: Matrix) -> Matrix:
    return np.where(cache["positive"], upstream, cache["slope"] * upstream)


# Batch normalization

@dataclass(eq=False)
class BatchNormState:
    gamma: Param
    beta: Param
    running_mean: np.ndarray
    running_var: np.ndarray
    epsilon: float = BN_EPSILON
    momentum: float = BN_MOMENTUM

    @classmethod
    def create(cls, n_features: int, name: str, epsilon: float = BN_EPSILON,
               momentum: float = BN_MOMENTUM) -> "BatchNormState":
        if epsilon <= 0:
            raise ValueError("batchnorm epsilon must be positive")
        return cls(
            gamma=Param(f"{name}.gamma", np.ones((1, n_features))),
            beta=Param(f"{name}.beta", np.zeros((1, n_features))),
            running_mean=np.zeros(n_features),
            running_var=np.ones(n_features),
            epsilon=epsilon,
            momentum=momentum,
        )

    @property
    def name(self) -> str:
        return self.gamma.name.rsplit(".", 1)[0]


def batchnorm_forward(state: BatchNormState, x: Matrix, mode: Mode) -> Tuple[Matrix, LayerCache]:
    """
    Per-feature normalization.

    Train mode normalizes by batch statistics and updates the running
    statistics (weight `momentum` on the new batch); infer mode uses the
    running statistics.
    """
    x = _as_batch(x)
    n, d = x.shape
    if d != state.running_mean.shape[0]:
        raise ShapeMismatch(f"batchnorm {state.name}: {d} features, expected {state.running_mean.shape[0]}")
    if Mode(mode) is Mode.TRAIN:
        if n < 2:
            raise BatchTooSmall(f"batchnorm {state.name} needs a batch of at least 2 in train mode, got {n}")
        mean = x.mean(axis=0)
        var = x.var(axis=0)
        state.running_mean[:] = (1.0 - state.momentum) * state.running_mean + state.momentum * mean
        unbiased = var * (n / (n - 1))
        state.running_var[:] = (1.0 - state.momentum) * state.running_var + state.momentum * unbiased
    else:
        mean = state.running_mean
        var = state.running_var
    inv_std = 1.0 / np.sqrt(var + state.epsilon)
    x_hat = (x - mean) * inv_std
    y = state.gamma.value * x_hat + state.beta.value
    return y, {"x_hat": x_hat, "inv_std": inv_std, "mode": Mode(mode)}


def batchnorm_backward(state: BatchNormState, cache: LayerCache, upstream: Matrix) -> Matrix:
    upstream = _as_batch(upstream, "upstream")
    x_hat = cache["x_hat"]
    inv_std = cache["inv_std"]
    state.gamma.grad += np.sum(upstream * x_hat, axis=0, keepdims=True)
    state.beta.grad += np.sum(upstream, axis=0, keepdims=True)
    dx_hat = upstream * state.gamma.value
    if cache["mode"] is Mode.INFER:
        return dx_hat * inv_std
    n = upstream.shape[0]
    return (inv_std / n) * (
        n * dx_hat - dx_hat.sum(axis=0) - x_hat * np.sum(dx_hat * x_hat, axis=0)
    )


# Dropout

def dropout(x: Matrix, rate: float, rng: Optional[RngStream], mode: Mode) -> Tuple[Matrix, Optional[np.ndarray]]:
    """
    Inverted dropout: surviving entries are scaled by 1 / (1 - rate).

    Returns the output and the applied mask (None when nothing was dropped).
    """
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    x = np.asarray(x, dtype=np.float64)
    if Mode(mode) is Mode.INFER or rate == 0.0:
        return x, None
    if rng is None:
        raise ValueError("train-mode dropout needs a random stream")
    keep = rng.next().random(x.shape) >= rate
    mask = keep / (1.0 - rate)
    return x * mask, mask


def dropout_backward(mask: Optional[np.ndarray], upstream: Matrix) -> Matrix:
    return upstream if mask is None else upstream * mask


# Layer objects

def he_normal(gen: np.random.Generator, fan_in: int, fan_out: int, slope: float) -> np.ndarray:
    """Fan-in scaled Gaussian init for (leaky) rectifier networks"""
    std = np.sqrt(2.0 / ((1.0 + slope ** 2) * fan_in))
    return gen.standard_normal((fan_in, fan_out)) * std


class Dense:
    """Fully connected layer; bias=False for layers that feed a batchnorm"""

    def __init__(self, n_in: int, n_out: int, name: str, gen: np.random.Generator,
                 slope: float = DEFAULT_LEAKY_SLOPE, bias: bool = True):
        self.name = name
        self.w = Param(f"{name}.w", he_normal(gen, n_in, n_out, slope))
        self.b = Param(f"{name}.b", np.zeros((1, n_out))) if bias else None

    def forward(self, x: Matrix) -> Tuple[Matrix, LayerCache]:
        return dense_forward(self.w, self.b, x)

    def backward(self, cache: LayerCache, upstream: Matrix) -> Matrix:
        return dense_backward(self.w, self.b, cache, upstream)

    def params(self) -> List[Param]:
        return [self.w] if self.b is None else [self.w, self.b]


@dataclass
class ResidualConfig:
    width: int = 1024
    dropout: float = 0.2
    leaky_slope: float = DEFAULT_LEAKY_SLOPE
    bn_epsilon: float = BN_EPSILON
    bn_momentum: float = BN_MOMENTUM


class ResidualBlock:
    """
    Two (dense -> batchnorm -> leaky ReLU -> dropout) stages with a skip
    connection around the pair. Each dropout draws its own mask.
    """

    def __init__(self, cfg: ResidualConfig, name: str, gen: np.random.Generator):
        self.cfg = cfg
        self.name = name
        self.dense1 = Dense(cfg.width, cfg.width, f"{name}.dense1", gen, cfg.leaky_slope, bias=False)
        self.bn1 = BatchNormState.create(cfg.width, f"{name}.bn1", cfg.bn_epsilon, cfg.bn_momentum)
        self.dense2 = Dense(cfg.width, cfg.width, f"{name}.dense2", gen, cfg.leaky_slope, bias=False)
        self.bn2 = BatchNormState.create(cfg.width, f"{name}.bn2", cfg.bn_epsilon, cfg.bn_momentum)

    def forward(self, x: Matrix, mode: Mode, rng: Optional[RngStream]) -> Tuple[Matrix, LayerCache]:
        x = _as_batch(x)
        if x.shape[1] != self.cfg.width:
            raise ShapeMismatch(f"residual {self.name}: input width {x.shape[1]}, expected {self.cfg.width}")
        caches = []
        out = x
        for dense, bn in ((self.dense1, self.bn1), (self.dense2, self.bn2)):
            out, c_dense = dense.forward(out)
            out, c_bn = batchnorm_forward(bn, out, mode)
            out, c_act = leaky_relu(out, self.cfg.leaky_slope)
            out, mask = dropout(out, self.cfg.dropout, rng, mode)
            caches.append((c_dense, c_bn, c_act, mask))
        return x + out, {"stages": caches}

    def backward(self, cache: LayerCache, upstream: Matrix) -> Matrix:
        grad = upstream
        stages = ((self.dense1, self.bn1), (self.dense2, self.bn2))
        for (dense, bn), (c_dense, c_bn, c_act, mask) in reversed(list(zip(stages, cache["stages"]))):
            grad = dropout_backward(mask, grad)
            grad = leaky_relu_backward(c_act, grad)
            grad = batchnorm_backward(bn, c_bn, grad)
            grad = dense.backward(c_dense, grad)
        return upstream + grad

    def params(self) -> List[Param]:
        return (self.dense1.params() + [self.bn1.gamma, self.bn1.beta]
                + self.dense2.params() + [self.bn2.gamma, self.bn2.beta])

    def batchnorms(self) -> List[BatchNormState]:
        return [self.bn1, self.bn2]


def residual_block_forward(block: ResidualBlock, x: Matrix, mode: Mode,
                           rng: Optional[RngStream]) -> Tuple[Matrix, LayerCache]:
    return block.forward(x, mode, rng)


def residual_block_backward(block: ResidualBlock, cache: LayerCache, upstream: Matrix) -> Matrix:
    return block.backward(cache, upstream)
