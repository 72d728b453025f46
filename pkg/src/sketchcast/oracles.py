"""Exact reference values for experiment scoring.

Everything here works on the pooled aggregate built by summing player
inputs exactly; nothing imports sketch or protocol code, so oracle
results cannot be contaminated by the machinery under test.
"""

from __future__ import annotations

import numpy as np


def frequency_moment(x: np.ndarray, p: float) -> float:
    """F_p = sum |x_i|^p."""
    if p <= 0:
        raise ValueError(f"p must be positive, got {p}")
    return float(np.sum(np.abs(np.asarray(x, dtype=np.float64)) ** p))


def lp_norm(x: np.ndarray, p: float) -> float:
    """||x||_p = F_p^{1/p} (a quasinorm for p < 1)."""
    return frequency_moment(x, p) ** (1.0 / p)


def entropy_nats(x: np.ndarray) -> float:
    """Shannon entropy of p_i = |x_i| / ||x||_1, in nats; 0 ln 0 = 0."""
    ax = np.abs(np.asarray(x, dtype=np.float64))
    total = ax.sum()
    if total == 0:
        raise ValueError("entropy undefined for the zero vector")
    probs = ax[ax > 0] / total
    return float(-np.sum(probs * np.log(probs)))


def tail_l2(x: np.ndarray, s: int) -> float:
    """L2 norm of x with its s largest-magnitude coordinates removed."""
    if s < 0:
        raise ValueError(f"tail size must be non-negative, got {s}")
    ax = np.sort(np.abs(np.asarray(x, dtype=np.float64)))
    kept = ax[: max(ax.size - s, 0)]
    return float(np.sqrt(np.sum(kept**2)))


def matrix_product(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Exact X^T Y."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 2 or y.ndim != 2 or x.shape[0] != y.shape[0]:
        raise ValueError(f"shapes {x.shape} and {y.shape} do not align")
    return x.T @ y
