"""Minimal deterministic numerical kernel.

Dense layers, embedding lookups, softmax cross-entropy, inverted dropout,
Adam, and a DP-SGD step. Everything is plain numpy with hand-written
backward passes; forward functions return a cache that the paired backward
consumes. Inputs may be single vectors or batches (leading batch axis);
gradients accumulate into ``Param.grad`` so multiple backward calls sum.

Parameters default to float32. Tests run the same kernels in float64 to
check analytic gradients against central finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np


class Param:
    """A trainable tensor with a same-shape gradient accumulator."""

    __slots__ = ("name", "value", "grad", "m", "v")

    def __init__(self, name: str, value: np.ndarray):
        self.name = name
        self.value = np.asarray(value)
        self.grad = np.zeros_like(self.value)
        self.m: Optional[np.ndarray] = None  # Adam first moment
        self.v: Optional[np.ndarray] = None  # Adam second moment

    def zero_grad(self) -> None:
        self.grad[...] = 0

    def copy_value(self) -> np.ndarray:
        return self.value.copy()


@dataclass
class DpConfig:
    enabled: bool = False
    clip_norm: float = 1.0
    noise_multiplier: float = 0.0
    reported_epsilon: Optional[float] = None  # informational only, never computed

    def __post_init__(self):
        if self.clip_norm <= 0:
            raise ValueError("clip_norm must be positive")
        if self.noise_multiplier < 0:
            raise ValueError("noise_multiplier must be non-negative")


def _as_batch(x: np.ndarray) -> tuple[np.ndarray, bool]:
    x = np.asarray(x)
    if x.ndim == 1:
        return x[None, :], True
    if x.ndim == 2:
        return x, False
    raise ValueError(f"expected vector or batch of vectors, got shape {x.shape}")


def dense_forward(x, w: Param, b: Param, activation: str = "relu"):
    """y = act(W x + b). Returns (y, cache) for the paired backward."""
    if activation not in ("relu", "none"):
        raise ValueError(f"unknown activation {activation!r}")
    xb, squeeze = _as_batch(x)
    if xb.shape[1] != w.value.shape[1]:
        raise ValueError(
            f"dense {w.name}: input width {xb.shape[1]} != weight width {w.value.shape[1]}"
        )
    pre = xb @ w.value.T + b.value
    y = np.maximum(pre, 0) if activation == "relu" else pre
    cache = (xb, pre, activation, squeeze)
    return (y[0] if squeeze else y), cache


def dense_backward(dy, cache, w: Param, b: Param):
    """Accumulates dL/dW and dL/db; returns dL/dx."""
    xb, pre, activation, squeeze = cache
    dyb, _ = _as_batch(dy)
    dpre = dyb * (pre > 0) if activation == "relu" else dyb
    w.grad += dpre.T @ xb
    b.grad += dpre.sum(axis=0)
    dx = dpre @ w.value
    return dx[0] if squeeze else dx


def embedding_forward(index, table: Param):
    """Row lookup; index may be a scalar or an int array."""
    idx = np.asarray(index)
    if idx.size and (idx.min() < 0 or idx.max() >= table.value.shape[0]):
        raise ValueError(f"embedding {table.name}: index out of range")
    y = table.value[idx]
    return y, (idx,)


def embedding_backward(dy, cache, table: Param) -> None:
    (idx,) = cache
    np.add.at(table.grad, idx, dy)


def softmax(logits: np.ndarray) -> np.ndarray:
    logits = np.asarray(logits)
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_cross_entropy(logits, target):
    """Returns (loss, grad_logits) with grad = softmax(logits) - onehot(target).

    Scalar target + vector logits give a scalar loss; batches give per-row
    losses and a grad matrix.
    """
    lb, squeeze = _as_batch(logits)
    targets = np.atleast_1d(np.asarray(target, dtype=np.int64))
    if targets.shape[0] != lb.shape[0]:
        raise ValueError("target count does not match logits batch")
    if targets.min() < 0 or targets.max() >= lb.shape[1]:
        raise ValueError("target class out of range")
    p = softmax(lb)
    rows = np.arange(lb.shape[0])
    # clip only guards the log; the gradient stays exact
    losses = -np.log(np.maximum(p[rows, targets], np.finfo(p.dtype).tiny))
    grad = p.copy()
    grad[rows, targets] -= 1
    if squeeze:
        return float(losses[0]), grad[0]
    return losses, grad


def dropout_mask(shape, rate: float, rng: np.random.Generator) -> np.ndarray:
    """Inverted dropout mask: 0 with probability ``rate``, else 1/(1-rate)."""
    if not 0 <= rate < 1:
        raise ValueError("dropout rate must be in [0, 1)")
    if rate == 0:
        return np.ones(shape, dtype=np.float32)
    keep = rng.random(shape) >= rate
    return keep.astype(np.float32) / np.float32(1.0 - rate)


def adam_step(
    params: Sequence[Param],
    lr: float,
    step: int,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    """Standard Adam with bias correction; zeroes gradients afterwards.

    A non-finite gradient anywhere rejects the whole step before any state
    is touched.
    """
    if step < 1:
        raise ValueError("step must be >= 1")
    for p in params:
        if not np.isfinite(p.grad).all():
            raise FloatingPointError(f"non-finite gradient in {p.name}; step rejected")
    c1 = 1.0 - beta1**step
    c2 = 1.0 - beta2**step
    for p in params:
        if p.m is None:
            p.m = np.zeros_like(p.value)
            p.v = np.zeros_like(p.value)
        p.m = beta1 * p.m + (1.0 - beta1) * p.grad
        p.v = beta2 * p.v + (1.0 - beta2) * p.grad**2
        m_hat = p.m / c1
        v_hat = p.v / c2
        p.value -= (lr * m_hat / (np.sqrt(v_hat) + eps)).astype(p.value.dtype)
        p.zero_grad()


def dp_sgd_step(
    params: Sequence[Param],
    per_example_grads: Sequence[Sequence[np.ndarray]],
    dp: DpConfig,
    lr: float,
    rng: np.random.Generator,
) -> None:
    """Clip each example's full gradient to norm <= C, sum, add N(0, (sigma*C)^2)
    noise per coordinate, divide by the batch size, and take an SGD step."""
    if not dp.enabled:
        raise ValueError("dp_sgd_step called with dp.enabled = False")
    batch = len(per_example_grads)
    if batch == 0:
        raise ValueError("empty batch")
    c = dp.clip_norm
    summed = [np.zeros_like(p.value, dtype=np.float64) for p in params]
    for grads in per_example_grads:
        sq = sum(float(np.sum(np.asarray(g, dtype=np.float64) ** 2)) for g in grads)
        norm = np.sqrt(sq)
        scale = min(1.0, c / norm) if norm > 0 else 1.0
        for acc, g in zip(summed, grads):
            acc += np.asarray(g, dtype=np.float64) * scale
    for p, acc in zip(params, summed):
        noisy = acc
        if dp.noise_multiplier > 0:
            noisy = acc + rng.normal(0.0, dp.noise_multiplier * c, size=acc.shape)
        p.value -= (lr * noisy / batch).astype(p.value.dtype)
        p.zero_grad()


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int, shape, dtype=np.float32) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(dtype)
