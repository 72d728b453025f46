"""Unbiased stochastic rounding onto the geometric grid {±(1+gamma)^i}.

A real r between grid points lo = (1+g)^i and hi = (1+g)^(i+1) rounds up
with probability p_r = (r - lo)/(hi - lo), which solves
p_r*hi + (1-p_r)*lo = r exactly, so the rounding is unbiased no matter how
accurately lo and hi themselves were computed.  The variance is at most
(gamma * r)^2.

Messages travel as (zero flag, sign, Elias-gamma of zigzag(exponent) + 1);
see WIRE.md.  The grid ratio comes from
gamma = (eps*delta / (d * log2(n*m)))^C, and the legal exponent window is
derived from the truncation bound K = (M*n*m)^2 / gamma: admissible
magnitudes lie in [(mK)^-(d+3), K^6], and a convergecast node at layer l
truncates below (mK)^-(d+3-l).  Those floors underflow float64 at large
depth, so all floor comparisons happen in log space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bitcodec import gamma_decode, gamma_encode, gamma_len, unzigzag, zigzag


class WindowError(ValueError):
    """A rounded exponent escaped [exponent_min, exponent_max]."""


@dataclass(frozen=True)
class RoundingParams:
    """Grid ratio gamma plus the legal exponent window.

    ``log_mk`` and ``depth`` carry the truncation geometry (ln(m*K) and the
    tree depth d) when built by :func:`gamma_for`; they are only needed to
    evaluate per-layer floors.
    """

    gamma: float
    exponent_min: int
    exponent_max: int
    log_mk: float | None = None
    depth: int | None = None

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError(f"gamma must be in (0,1], got {self.gamma}")
        if self.exponent_min >= self.exponent_max:
            raise ValueError("exponent_min must be below exponent_max")

    @property
    def log_gamma(self) -> float:
        return math.log1p(self.gamma)

    def log_floor(self, layer: int) -> float:
        """ln of the truncation floor (mK)^-(d+3-layer) for a given layer."""
        if self.log_mk is None or self.depth is None:
            return -math.inf
        return -(self.depth + 3 - layer) * self.log_mk


@dataclass(frozen=True)
class RoundedMessage:
    is_zero: bool
    sign: int = 1
    exponent: int = 0


def _grid_interpolation(ax: float, log_gamma: float) -> tuple[int, float, float, float]:
    """Exponent i with (1+g)^i <= ax, the bracketing grid values, and p_r."""
    lv = math.log(ax)
    i = math.floor(lv / log_gamma)
    for _ in range(2):
        if (i + 1) * log_gamma <= lv:
            i += 1
    for _ in range(2):
        if i * log_gamma > lv:
            i -= 1
    lo = math.exp(i * log_gamma)
    hi = math.exp((i + 1) * log_gamma)
    pr = min(1.0, max(0.0, (ax - lo) / (hi - lo)))
    return i, lo, hi, pr


def round_stochastic(r: float, params: RoundingParams, rng: np.random.Generator) -> RoundedMessage:
    """Round r onto the grid; exact zeros stay zero.

    Callers enforce truncation floors before calling; this routine only
    validates the exponent window.
    """
    if r == 0.0:
        return RoundedMessage(is_zero=True)
    i, _, _, pr = _grid_interpolation(abs(r), params.log_gamma)
    e = i + 1 if rng.random() < pr else i
    if not params.exponent_min <= e <= params.exponent_max:
        raise WindowError(
            f"exponent {e} outside [{params.exponent_min}, {params.exponent_max}] for value {r!r}"
        )
    return RoundedMessage(is_zero=False, sign=1 if r > 0 else -1, exponent=e)


def decode(msg: RoundedMessage, params: RoundingParams) -> float:
    if msg.is_zero:
        return 0.0
    return msg.sign * math.exp(msg.exponent * params.log_gamma)


def message_bits(msg: RoundedMessage) -> int:
    """Exact wire length: 1 bit if zero, else 2 + gamma_len(zigzag(e)+1)."""
    if msg.is_zero:
        return 1
    return 2 + gamma_len(zigzag(msg.exponent) + 1)


def encode_bits(msg: RoundedMessage) -> str:
    if msg.is_zero:
        return "1"
    sign = "0" if msg.sign > 0 else "1"
    return "0" + sign + gamma_encode(zigzag(msg.exponent) + 1)


def decode_bits(bits: str, pos: int = 0) -> tuple[RoundedMessage, int]:
    """Inverse of :func:`encode_bits`; returns (message, next position)."""
    if bits[pos] == "1":
        return RoundedMessage(is_zero=True), pos + 1
    sign = 1 if bits[pos + 1] == "0" else -1
    v, nxt = gamma_decode(bits, pos + 2)
    return RoundedMessage(is_zero=False, sign=sign, exponent=unzigzag(v - 1)), nxt


def gamma_for(
    eps: float,
    delta: float,
    d: int,
    n: int,
    m: int,
    C_exponent: float = 1.0,
    M: int = 1000,
) -> RoundingParams:
    """RoundingParams for a depth-d convergecast on m players over [n].

    gamma = (eps*delta / (d * log2(n*m)))^C_exponent, and the exponent
    window brackets [(mK)^-(d+3), K^6] with K = (M*n*m)^2 / gamma.  M
    defaults to the desk-scale input bound; protocols pass their real one.
    """
    if not (0.0 < eps < 1.0 and 0.0 < delta < 1.0):
        raise ValueError(f"eps and delta must be in (0,1), got {eps}, {delta}")
    if d < 1 or n < 1 or m < 1 or M < 1:
        raise ValueError("d, n, m, M must all be >= 1")
    gamma = (eps * delta / (d * math.log2(n * m))) ** C_exponent
    gamma = min(gamma, 1.0)
    log_gamma = math.log1p(gamma)
    log_k = 2.0 * math.log(M * n * m) - math.log(gamma)
    log_mk = math.log(m) + log_k
    exponent_min = math.floor(-(d + 3) * log_mk / log_gamma) - 1
    exponent_max = math.ceil(6.0 * log_k / log_gamma) + 1
    return RoundingParams(
        gamma=gamma,
        exponent_min=exponent_min,
        exponent_max=exponent_max,
        log_mk=log_mk,
        depth=d,
    )
