"""Hot numeric kernels with a numba backend and a pure-numpy fallback.

Every kernel exists twice: an ``@njit`` scalar-loop version and a
vectorized numpy version.  The active backend is chosen at import time
from the ``SKETCHCAST_BACKEND`` environment variable:

    numba   force the jitted kernels (error if numba is missing)
    numpy   force the pure-numpy fallback
    auto    numba when importable, numpy otherwise (default)

The rounding and stable-transform kernels consume pre-drawn uniforms in
the same order on both backends, so they agree to floating-point
round-off.  The Morris-counter kernels draw internally with different
batching per backend; there the two implementations are equal in
distribution rather than value for value (the counter chain is sampled
via run-length skipping either way).  ``bench kernels`` times both.
"""

from __future__ import annotations

import math
import os

import numpy as np

try:  # pragma: no cover - exercised implicitly by backend selection
    import numba
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):  # type: ignore
        def wrap(f):
            return f

        if args and callable(args[0]):
            return args[0]
        return wrap


_LN2 = math.log(2.0)
# Floor for exponential/cosine factors inside the stable transforms; keeps
# a zero-probability draw from producing inf without moving any quantile.
_TINY = 1e-300


def _resolve_backend() -> str:
    choice = os.environ.get("SKETCHCAST_BACKEND", "auto").lower()
    if choice == "numba":
        if not NUMBA_AVAILABLE:
            raise RuntimeError("SKETCHCAST_BACKEND=numba but numba is not importable")
        return "numba"
    if choice == "numpy":
        return "numpy"
    if choice == "auto":
        return "numba" if NUMBA_AVAILABLE else "numpy"
    raise RuntimeError(f"unknown SKETCHCAST_BACKEND {choice!r} (use numba|numpy|auto)")


BACKEND = _resolve_backend()


# ---------------------------------------------------------------------------
# Chambers-Mallows-Stuck stable transforms.
#
# Symmetric case, stability p, from U ~ Uniform(-pi/2, pi/2), W ~ Exp(1):
#     Z = sin(p U) / cos(U)^(1/p) * (cos((1-p) U) / W)^((1-p)/p)
# which has characteristic function e^{-|t|^p}.  At p=1 this degenerates to
# tan(U).  The p=1 skewed case (skewness beta) is
#     Z = (2/pi) [ (pi/2 + beta U) tan U
#                  - beta ln( (pi/2 W cos U) / (pi/2 + beta U) ) ]
# in the parameterization where ln E[exp(t Z)] = (2/pi) t ln t for beta=-1.
# ---------------------------------------------------------------------------


def _cms_symmetric_np(p: float, u: np.ndarray, w: np.ndarray) -> np.ndarray:
    w = np.maximum(w, _TINY)
    if p == 1.0:
        return np.tan(u)
    cu = np.maximum(np.cos(u), _TINY)
    return (np.sin(p * u) / cu ** (1.0 / p)) * (np.cos((1.0 - p) * u) / w) ** (
        (1.0 - p) / p
    )


@njit(cache=True)
def _cms_symmetric_nb(p: float, u: np.ndarray, w: np.ndarray) -> np.ndarray:  # pragma: no cover
    out = np.empty(u.shape[0], dtype=np.float64)
    for i in range(u.shape[0]):
        wi = w[i] if w[i] > _TINY else _TINY
        if p == 1.0:
            out[i] = np.tan(u[i])
        else:
            cu = np.cos(u[i])
            if cu < _TINY:
                cu = _TINY
            out[i] = (np.sin(p * u[i]) / cu ** (1.0 / p)) * (
                np.cos((1.0 - p) * u[i]) / wi
            ) ** ((1.0 - p) / p)
    return out


def _cms_skewed_one_np(beta: float, u: np.ndarray, w: np.ndarray) -> np.ndarray:
    w = np.maximum(w, _TINY)
    hp = 0.5 * np.pi
    a = hp + beta * u
    return (2.0 / np.pi) * (
        a * np.tan(u) - beta * np.log((hp * w * np.maximum(np.cos(u), _TINY)) / a)
    )


@njit(cache=True)
def _cms_skewed_one_nb(beta: float, u: np.ndarray, w: np.ndarray) -> np.ndarray:  # pragma: no cover
    out = np.empty(u.shape[0], dtype=np.float64)
    hp = 0.5 * np.pi
    for i in range(u.shape[0]):
        wi = w[i] if w[i] > _TINY else _TINY
        cu = np.cos(u[i])
        if cu < _TINY:
            cu = _TINY
        a = hp + beta * u[i]
        out[i] = (2.0 / np.pi) * (a * np.tan(u[i]) - beta * np.log((hp * wi * cu) / a))
    return out


# ---------------------------------------------------------------------------
# Stochastic rounding onto the grid {±(1+gamma)^i}.
#
# Given r with ln|r| >= log_floor, find i with (1+g)^i <= |r| <= (1+g)^(i+1)
# and round up with probability p_r = (|r| - lo)/(hi - lo), which makes the
# rounding exactly unbiased.  Values below the floor are truncated to an
# exact zero.  Inputs outside [exp_min, exp_max] after rounding indicate a
# mis-sized window and are flagged rather than silently clipped.
# ---------------------------------------------------------------------------


def _round_to_grid_np(
    x: np.ndarray,
    unif: np.ndarray,
    log_gamma: float,
    log_floor: float,
    exp_min: int,
    exp_max: int,
):
    ax = np.abs(x)
    nonzero = ax > 0.0
    lax = np.full(x.shape, -np.inf)
    np.log(ax, out=lax, where=nonzero)
    is_zero = lax < log_floor

    live = ~is_zero
    e0 = np.zeros(x.shape, dtype=np.int64)
    lv = np.where(live, lax, 0.0)
    e0 = np.floor(lv / log_gamma).astype(np.int64)
    # one-step boundary corrections; the float division is off by at most 1
    for _ in range(2):
        e0 = np.where((e0 + 1) * log_gamma <= lv, e0 + 1, e0)
    for _ in range(2):
        e0 = np.where(e0 * log_gamma > lv, e0 - 1, e0)

    lo = np.exp(e0 * log_gamma)
    hi = np.exp((e0 + 1) * log_gamma)
    pr = np.clip((ax - lo) / (hi - lo), 0.0, 1.0)
    exponents = np.where(unif < pr, e0 + 1, e0)
    exponents = np.where(live, exponents, 0)

    ok = bool(
        np.all((exponents[live] >= exp_min) & (exponents[live] <= exp_max))
        if live.any()
        else True
    )
    decoded = np.where(live, np.sign(x) * np.exp(exponents * log_gamma), 0.0)
    return exponents, is_zero, decoded, ok


@njit(cache=True)
def _round_to_grid_nb(
    x: np.ndarray,
    unif: np.ndarray,
    log_gamma: float,
    log_floor: float,
    exp_min: int,
    exp_max: int,
):  # pragma: no cover
    n = x.shape[0]
    exponents = np.zeros(n, dtype=np.int64)
    is_zero = np.zeros(n, dtype=np.bool_)
    decoded = np.zeros(n, dtype=np.float64)
    ok = True
    for i in range(n):
        ax = abs(x[i])
        if ax <= 0.0 or np.log(ax) < log_floor:
            is_zero[i] = True
            continue
        lv = np.log(ax)
        e0 = np.int64(np.floor(lv / log_gamma))
        for _ in range(2):
            if (e0 + 1) * log_gamma <= lv:
                e0 += 1
        for _ in range(2):
            if e0 * log_gamma > lv:
                e0 -= 1
        lo = np.exp(e0 * log_gamma)
        hi = np.exp((e0 + 1) * log_gamma)
        pr = (ax - lo) / (hi - lo)
        if pr < 0.0:
            pr = 0.0
        elif pr > 1.0:
            pr = 1.0
        e = e0 + 1 if unif[i] < pr else e0
        if e < exp_min or e > exp_max:
            ok = False
        exponents[i] = e
        val = np.exp(e * log_gamma)
        decoded[i] = -val if x[i] < 0 else val
    return exponents, is_zero, decoded, ok


# ---------------------------------------------------------------------------
# Wire-length accounting.
#
# A rounded message costs 1 bit when truncated to zero, else
# 2 + gamma_len(zigzag(exponent) + 1) bits (zero flag, sign, Elias gamma).
# A Morris counter pair costs 8 + gamma_len(C_ins + 1) + gamma_len(C_del + 1).
# ---------------------------------------------------------------------------


def _floor_log2_f64(v: np.ndarray) -> np.ndarray:
    # frexp gives v = m * 2^e with m in [0.5, 1), so floor(log2 v) = e - 1
    _, e = np.frexp(v)
    return (e - 1).astype(np.int64)


def _rounded_bits_np(exponents: np.ndarray, is_zero: np.ndarray) -> np.ndarray:
    zz = np.where(exponents >= 0, 2 * exponents, -2 * exponents - 1)
    glen = 2 * _floor_log2_f64((zz + 1).astype(np.float64)) + 1
    return np.where(is_zero, 1, 2 + glen).astype(np.int64)


@njit(cache=True)
def _rounded_bits_nb(exponents: np.ndarray, is_zero: np.ndarray) -> np.ndarray:  # pragma: no cover
    n = exponents.shape[0]
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        if is_zero[i]:
            out[i] = 1
            continue
        e = exponents[i]
        zz = 2 * e if e >= 0 else -2 * e - 1
        v = zz + 1
        b = 0
        while v > 1:
            v >>= 1
            b += 1
        out[i] = 2 + 2 * b + 1
    return out


# ---------------------------------------------------------------------------
# Morris counter chains.
#
# A counter in state C absorbs one update by incrementing with probability
# b^(-C).  add_batch plays `u` updates against lane states `c` without
# iterating per update: while the increment probability q = b^(-C) is >= 1/2
# it samples the first failure time T of the inhomogeneous success chain
# (quadratic inversion of the survival function), and once q < 1/2 it
# samples the geometric gap to the next increment.  Both branches follow
# the exact per-update law.
#
# merge plays counter Y into counter Z = X via the chain that increments Z
# with probability b^(-Z + i - 1) at step i = 1..Y.  Writing W = Z - i + 1,
# W stays constant on success and drops by one on failure, so runs of
# successes are geometric with fixed rate and the loop costs
# O(min(X, Y) + 1) draws.
#
# When every step's failure probability p_j is tiny (protocol bases sit
# within 1e-30 of 1 while batches reach 1e30 updates), both chains reduce
# to counting rare failures: the total F is within total variation
# max(p_j) of Poisson(sum p_j) for any number of steps, so one Poisson
# draw replaces the loop whenever max_p <= 1e-8.  Statistics-scale bases
# (b ~ 1.05) never take this path.  Beyond lam = 1e17 the Poisson itself
# is sampled through its normal limit (relative error ~ 1/sqrt(lam)).
# ---------------------------------------------------------------------------

_RARE_P = 1e-8
_POISSON_LAM_MAX = 1e17


@njit(cache=True)
def _rare_failures_nb(gen, lam: float) -> float:  # pragma: no cover
    if lam > _POISSON_LAM_MAX:
        return max(np.rint(gen.normal(lam, np.sqrt(lam))), 0.0)
    return float(gen.poisson(lam))


@njit(cache=True)
def _morris_add_batch_nb(gen, c: np.ndarray, u: np.ndarray, log_b: float):  # pragma: no cover
    for i in range(c.shape[0]):
        ci = c[i]
        rem = u[i]
        while rem >= 1.0:
            if (ci + rem) * log_b <= _RARE_P:
                lam = log_b * (ci * rem + 0.5 * rem * (rem - 1.0))
                f = min(_rare_failures_nb(gen, lam), rem)
                ci += rem - f
                rem = 0.0
            elif ci * log_b <= _LN2:
                # q >= 1/2: survival through j steps is exp(-log_b*(j*ci + j(j-1)/2))
                t = -np.log1p(-gen.random())
                a = 2.0 * ci - 1.0
                js = 0.5 * (-a + np.sqrt(a * a + 8.0 * t / log_b))
                big = np.floor(js) + 1.0
                if big > rem:
                    ci += rem
                    rem = 0.0
                else:
                    ci += big - 1.0
                    rem -= big
            else:
                q = np.exp(-ci * log_b)
                gap = np.floor(np.log1p(-gen.random()) / np.log1p(-q)) + 1.0
                if gap > rem:
                    rem = 0.0
                else:
                    ci += 1.0
                    rem -= gap
        c[i] = ci
    return c


def _rare_failures_np(gen, lam: np.ndarray) -> np.ndarray:
    f = np.empty_like(lam)
    big = lam > _POISSON_LAM_MAX
    f[~big] = gen.poisson(lam[~big])
    if big.any():
        f[big] = np.maximum(np.rint(gen.normal(lam[big], np.sqrt(lam[big]))), 0.0)
    return f


def _morris_add_batch_np(gen, c: np.ndarray, u: np.ndarray, log_b: float):
    rem = u.astype(np.float64).copy()
    active = rem >= 1.0
    while active.any():
        idx = np.nonzero(active)[0]
        rare = (c[idx] + rem[idx]) * log_b <= _RARE_P
        ri = idx[rare]
        if ri.size:
            lam = log_b * (c[ri] * rem[ri] + 0.5 * rem[ri] * (rem[ri] - 1.0))
            f = np.minimum(_rare_failures_np(gen, lam), rem[ri])
            c[ri] += rem[ri] - f
            rem[ri] = 0.0
            idx = idx[~rare]
            if not idx.size:
                break
        ci = c[idx]
        draws = gen.random(idx.shape[0])
        fast = ci * log_b <= _LN2
        # failure-time branch
        fi = idx[fast]
        if fi.size:
            t = -np.log1p(-draws[fast])
            a = 2.0 * c[fi] - 1.0
            big = np.floor(0.5 * (-a + np.sqrt(a * a + 8.0 * t / log_b))) + 1.0
            done = big > rem[fi]
            c[fi] += np.where(done, rem[fi], big - 1.0)
            rem[fi] = np.where(done, 0.0, rem[fi] - big)
        # geometric-gap branch
        gi = idx[~fast]
        if gi.size:
            q = np.exp(-c[gi] * log_b)
            gap = np.floor(np.log1p(-draws[~fast]) / np.log1p(-q)) + 1.0
            hit = gap <= rem[gi]
            c[gi] += np.where(hit, 1.0, 0.0)
            rem[gi] = np.where(hit, rem[gi] - gap, 0.0)
        active = rem >= 1.0
    return c


@njit(cache=True)
def _morris_merge_nb(gen, cx: np.ndarray, cy: np.ndarray, log_b: float):  # pragma: no cover
    for i in range(cx.shape[0]):
        z = cx[i]
        y = cy[i]
        rem = y
        while rem >= 1.0:
            w = z - y + rem
            if w <= 0.0:
                z += rem
                break
            p = -np.expm1(-w * log_b)
            if p <= _RARE_P:
                f = min(_rare_failures_nb(gen, p * rem), rem)
                z += rem - f
                break
            # successes before the first failure; success prob exp(-w*log_b)
            runs = np.floor(-np.log1p(-gen.random()) / (w * log_b))
            if runs >= rem:
                z += rem
                break
            z += runs
            rem -= runs + 1.0
        cx[i] = z
    return cx


def _morris_merge_np(gen, cx: np.ndarray, cy: np.ndarray, log_b: float):
    y = cy.astype(np.float64)
    rem = y.copy()
    active = rem >= 1.0
    while active.any():
        idx = np.nonzero(active)[0]
        w = cx[idx] - y[idx] + rem[idx]
        free = w <= 0.0
        fi = idx[free]
        if fi.size:
            cx[fi] += rem[fi]
            rem[fi] = 0.0
        p = -np.expm1(-w * log_b)
        rare = ~free & (p <= _RARE_P)
        ri = idx[rare]
        if ri.size:
            f = np.minimum(_rare_failures_np(gen, p[rare] * rem[ri]), rem[ri])
            cx[ri] += rem[ri] - f
            rem[ri] = 0.0
        keep = ~free & ~rare
        gi = idx[keep]
        if gi.size:
            runs = np.floor(
                -np.log1p(-gen.random(gi.shape[0])) / (w[keep] * log_b)
            )
            done = runs >= rem[gi]
            cx[gi] += np.where(done, rem[gi], runs)
            rem[gi] = np.where(done, 0.0, rem[gi] - runs - 1.0)
        active = rem >= 1.0
    return cx


# ---------------------------------------------------------------------------
# Backend dispatch table.
# ---------------------------------------------------------------------------

_IMPLS = {
    "numpy": {
        "cms_symmetric": _cms_symmetric_np,
        "cms_skewed_one": _cms_skewed_one_np,
        "round_to_grid": _round_to_grid_np,
        "rounded_bits": _rounded_bits_np,
        "morris_add_batch": _morris_add_batch_np,
        "morris_merge": _morris_merge_np,
    },
    "numba": {
        "cms_symmetric": _cms_symmetric_nb,
        "cms_skewed_one": _cms_skewed_one_nb,
        "round_to_grid": _round_to_grid_nb,
        "rounded_bits": _rounded_bits_nb,
        "morris_add_batch": _morris_add_batch_nb,
        "morris_merge": _morris_merge_nb,
    },
}


def impl(name: str, backend: str | None = None):
    """Fetch a kernel by name for ``backend`` (default: the active one)."""
    return _IMPLS[backend or BACKEND][name]


cms_symmetric = impl("cms_symmetric")
cms_skewed_one = impl("cms_skewed_one")
round_to_grid = impl("round_to_grid")
rounded_bits = impl("rounded_bits")
morris_add_batch = impl("morris_add_batch")
morris_merge = impl("morris_merge")
