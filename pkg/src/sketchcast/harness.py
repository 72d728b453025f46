"""Experiment orchestration: data generation, trial loops, reports.

An ExperimentSpec names a protocol, a topology, a data distribution, and
accuracy/trial parameters; run_experiment executes the trials (optionally
thread-parallel, reduction order fixed by trial index), scores each one
against the exact oracles, and emits a CSV row per trial plus a JSON
summary.  Outputs contain no timestamps or wall-clock fields, so a (spec,
seed) pair reproduces byte-identical files; per-trial wall time lives
only on the in-memory TrialReport.

Distribution specs:
    zipf:s            per-player multinomial over exact zipf(s) weights
    zipfagg:s:TOTAL   one TOTAL-token multinomial aggregate, then split
    uniform:v         aggregate v at every coordinate
    sparse:density    Bernoulli support, uniform values in [1, 10]
    planted:v:c       c coordinates of value v, the rest ones
    delta:v           single coordinate of value v
    pair:a:b          two coordinates a and b
    file:PATH         aggregate counts, one integer per line

Stream specs for the stream protocols: zipf:s:COUNT draws a fresh
COUNT-token multinomial per trial; file:PATH replays "index delta" lines.
Aggregates are split across players deterministically: player v gets
floor(x/m) plus one unit when v < x mod m, coordinate-wise.
"""

from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import oracles
from .engine import CommStats
from .entropy import EntropyConfig, estimate_entropy, stream_entropy
from .fp_high import FpHighConfig, estimate_fp_high
from .fp_low import FpLowConfig, estimate_fp_low, stream_fp_logcosine
from .heavy_hitters import CountSketchSpec, heavy_hitters, point_estimate_all
from .matrix_product import AmpConfig, amp_estimate
from .streams import DOMAIN_DATA, DOMAIN_TOPOLOGY, DOMAIN_TRIAL, generator, substream
from .topology import from_spec

SCHEMA_VERSION = 1

CSV_COLUMNS = ("schema_version", "trial", "estimate", "exact", "error",
               "success", "recovered", "max_edge_bits", "total_bits", "rounds")

PROTOCOLS = ("fp", "hh", "entropy", "amp", "stream-fp", "stream-entropy")

# acceptance success-rate floors enforced under --check
CHECK_THRESHOLDS = {
    "fp": 0.70,
    "hh": 0.95,
    "entropy": 0.70,
    "amp": 0.70,
    "stream-fp": 2.0 / 3.0,
    "stream-entropy": 0.70,
}


@dataclass(frozen=True)
class ExperimentSpec:
    protocol: str
    topology: str = "star"
    n: int = 1000
    m: int = 16
    dist: str = "zipf:1.1"
    eps: float = 0.1
    trials: int = 100
    seed: int = 0
    p: float | None = None
    t1: int = 1
    t2: int = 1
    tokens: int = 5000
    M: float | None = None
    mode: str = "exact-y"
    codec: str = "rounding"

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise ValueError(f"unknown protocol {self.protocol!r}")
        if self.trials < 1:
            raise ValueError(f"need trials >= 1, got {self.trials}")
        if self.n < 1 or self.m < 1:
            raise ValueError(f"need n, m >= 1, got n={self.n} m={self.m}")
        if self.protocol in ("fp", "stream-fp") and self.p is None:
            raise ValueError(f"protocol {self.protocol} requires p")


@dataclass
class TrialReport:
    trial: int
    estimate: float
    exact: float
    error: float
    success: bool
    max_edge_bits: int
    total_bits: int
    rounds: int
    wall_time: float
    recovered: bool | None = None


def split_units(x: np.ndarray, m: int) -> np.ndarray:
    """(m, n) player slices of integer aggregate x; slices sum to x."""
    x = np.asarray(x)
    base, rem = np.divmod(x.astype(np.int64), m)
    out = np.tile(base, (m,) + (1,) * x.ndim).astype(np.float64)
    idx = np.arange(m).reshape((m,) + (1,) * x.ndim)
    out += idx < rem
    return out


def zipf_weights(n: int, s: float) -> np.ndarray:
    """Exact zipf(s) probabilities over coordinates 1..n."""
    w = np.arange(1, n + 1, dtype=np.float64) ** -s
    return w / w.sum()


def _dist_fields(dist: str) -> list[str]:
    return dist.split(":")


def generate_players(spec: ExperimentSpec, rng: np.random.Generator) -> np.ndarray:
    """(m, n) per-player counts for one trial."""
    kind, *args = _dist_fields(spec.dist)
    n, m = spec.n, spec.m
    if kind == "zipf":
        w = zipf_weights(n, float(args[0]))
        return rng.multinomial(spec.tokens, w, size=m).astype(np.float64)
    return split_units(generate_aggregate(spec, rng), m)


def generate_aggregate(spec: ExperimentSpec, rng: np.random.Generator) -> np.ndarray:
    """Aggregate count vector for distributions defined on the total."""
    kind, *args = _dist_fields(spec.dist)
    n = spec.n
    if kind == "zipfagg":
        s = float(args[0])
        total = int(args[1]) if len(args) > 1 else spec.tokens * spec.m
        return rng.multinomial(total, zipf_weights(n, s)).astype(np.int64)
    if kind == "uniform":
        v = int(args[0]) if args else int(spec.M or 1)
        return np.full(n, v, dtype=np.int64)
    if kind == "sparse":
        density = float(args[0]) if args else 0.1
        support = rng.random(n) < density
        return np.where(support, rng.integers(1, 11, n), 0).astype(np.int64)
    if kind == "planted":
        v, c = int(args[0]), int(args[1]) if len(args) > 1 else 1
        if c > n:
            raise ValueError(f"planted count {c} exceeds n={n}")
        x = np.ones(n, dtype=np.int64)
        x[:c] = v
        return x
    if kind == "delta":
        x = np.zeros(n, dtype=np.int64)
        x[0] = int(args[0]) if args else 1
        return x
    if kind == "pair":
        x = np.zeros(n, dtype=np.int64)
        x[0], x[1] = int(args[0]), int(args[1])
        return x
    if kind == "file":
        path = Path(":".join(args))
        try:
            x = np.loadtxt(path, dtype=np.int64, ndmin=1)
        except OSError as exc:
            raise OSError(f"cannot read counts file {path}: {exc}") from exc
        if x.size != n:
            raise ValueError(f"counts file {path} has {x.size} rows, spec says n={n}")
        return x
    raise ValueError(f"unknown distribution {spec.dist!r}")


def generate_matrix(spec: ExperimentSpec, t: int, rng: np.random.Generator) -> np.ndarray:
    """(n, t) non-negative aggregate matrix for the amp protocol."""
    kind, *args = _dist_fields(spec.dist)
    n = spec.n
    if kind == "sparse":
        density = float(args[0]) if args else 0.1
        support = rng.random((n, t)) < density
        return np.where(support, rng.integers(1, 11, (n, t)), 0).astype(np.float64)
    if kind == "zipf":
        w = zipf_weights(n, float(args[0]))
        cols = [rng.multinomial(spec.tokens, w) for _ in range(t)]
        return np.stack(cols, axis=1).astype(np.float64)
    if kind == "uniform":
        v = int(args[0]) if args else 1
        return np.full((n, t), v, dtype=np.float64)
    raise ValueError(f"distribution {spec.dist!r} not supported for matrices")


def generate_stream(spec: ExperimentSpec, rng: np.random.Generator) -> list[tuple[int, int]]:
    """Insertion-only update stream for one trial."""
    kind, *args = _dist_fields(spec.dist)
    if kind == "zipf":
        s = float(args[0])
        count = int(args[1]) if len(args) > 1 else 10**5
        counts = rng.multinomial(count, zipf_weights(spec.n, s))
        return [(int(i), int(c)) for i, c in enumerate(counts) if c > 0]
    if kind == "file":
        path = Path(":".join(args))
        try:
            rows = np.loadtxt(path, dtype=np.int64, ndmin=2)
        except OSError as exc:
            raise OSError(f"cannot read stream file {path}: {exc}") from exc
        return [(int(i), int(d)) for i, d in rows]
    raise ValueError(f"unknown stream spec {spec.dist!r}")


def _planted_ids(dist: str) -> list[int]:
    kind, *args = _dist_fields(dist)
    if kind != "planted":
        return []
    c = int(args[1]) if len(args) > 1 else 1
    return list(range(c))


def _rel_error(estimate: float, exact: float) -> float:
    if exact == 0.0:
        return 0.0 if estimate == 0.0 else math.inf
    return abs(estimate - exact) / abs(exact)


def run_trial(spec: ExperimentSpec, trial: int) -> TrialReport:
    """One protocol execution scored against the exact oracle."""
    start = time.perf_counter()
    data_rng = generator(spec.seed, DOMAIN_DATA, trial)
    pseed = substream(spec.seed, DOMAIN_TRIAL, trial)
    recovered = None

    if spec.protocol.startswith("stream-"):
        stream = generate_stream(spec, data_rng)
        x = np.zeros(spec.n)
        for i, d in stream:
            x[i] += d
        if spec.protocol == "stream-fp":
            est = stream_fp_logcosine(stream, spec.p, spec.eps, mode=spec.mode,
                                      seed=pseed, n=spec.n)
            exact = oracles.lp_norm(x, spec.p)
            error = _rel_error(est, exact)
        else:
            est = stream_entropy(stream, EntropyConfig(eps=spec.eps), seed=pseed, n=spec.n)
            exact = oracles.entropy_nats(x)
            error = abs(est - exact)
        success = error <= spec.eps
        comm = CommStats(per_edge_bits={}, rounds=0)
    else:
        topo = from_spec(spec.topology, spec.m, substream(spec.seed, DOMAIN_TOPOLOGY))
        if spec.protocol == "amp":
            xmat = generate_matrix(spec, spec.t1, data_rng)
            ymat = generate_matrix(spec, spec.t2, data_rng)
            cfg = AmpConfig(t1=spec.t1, t2=spec.t2, eps=spec.eps)
            r, comm = amp_estimate(split_units(xmat, spec.m), split_units(ymat, spec.m),
                                   topo, cfg, pseed, codec=spec.codec)
            exact_mat = oracles.matrix_product(xmat, ymat)
            est = float(np.linalg.norm(r - exact_mat))
            exact = float(np.linalg.norm(xmat) * np.linalg.norm(ymat))
            error = est / exact if exact > 0 else (0.0 if est == 0.0 else math.inf)
            success = error <= spec.eps
        else:
            players = generate_players(spec, data_rng)
            x = players.sum(axis=0)
            if spec.protocol == "fp":
                if spec.p is None or spec.p == 1.0 or not 0.0 < spec.p <= 2.0:
                    raise ValueError(f"fp needs p in (0,1) or (1,2], got {spec.p}")
                if spec.p > 1.0:
                    cfg = FpHighConfig(p=spec.p, eps=spec.eps)
                    _, est, comm = estimate_fp_high(players, topo, cfg, pseed,
                                                    codec=spec.codec)
                else:
                    cfg = FpLowConfig(p=spec.p, eps=spec.eps)
                    est, comm = estimate_fp_low(players, topo, cfg, pseed)
                exact = oracles.frequency_moment(x, spec.p)
                error = _rel_error(est, exact)
                success = error <= spec.eps
            elif spec.protocol == "hh":
                cs = CountSketchSpec.build(spec.n, spec.eps, pseed)
                x_tilde, comm = point_estimate_all(players, topo, cs, spec.eps,
                                                   pseed, codec=spec.codec)
                _, f2_est, f2_comm = estimate_fp_high(
                    players, topo, FpHighConfig(p=2.0, eps=spec.eps), substream(pseed, 1),
                    codec=spec.codec)
                comm = comm.merged(f2_comm)
                est = float(np.max(np.abs(x_tilde - x)))
                tail = oracles.tail_l2(x, math.ceil(1.0 / spec.eps**2))
                exact = spec.eps * tail
                error = est / exact if exact > 0 else (0.0 if est == 0.0 else math.inf)
                hits = heavy_hitters(x_tilde, spec.eps, f2_est)
                recovered = all(q in hits for q in _planted_ids(spec.dist))
                success = error <= 1.0 and recovered
            elif spec.protocol == "entropy":
                h, stats = estimate_entropy(players, topo, EntropyConfig(eps=spec.eps),
                                            pseed)
                comm = stats.comm
                est = h
                exact = oracles.entropy_nats(x)
                error = abs(est - exact)
                success = error <= spec.eps
            else:  # pragma: no cover
                raise AssertionError(spec.protocol)

    return TrialReport(
        trial=trial,
        estimate=float(est),
        exact=float(exact),
        error=float(error),
        success=bool(success),
        max_edge_bits=comm.max_edge_bits,
        total_bits=comm.total_bits,
        rounds=comm.rounds,
        wall_time=time.perf_counter() - start,
        recovered=recovered,
    )


def thread_count() -> int:
    """Worker count from SKETCHCAST_THREADS; 1 means sequential."""
    try:
        return max(1, int(os.environ.get("SKETCHCAST_THREADS", "1")))
    except ValueError:
        return 1


def run_experiment(spec: ExperimentSpec) -> tuple[list[TrialReport], dict]:
    """All trials plus a summary dict; deterministic given (spec, seed)."""
    workers = thread_count()
    trials = range(spec.trials)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(lambda t: run_trial(spec, t), trials))
    else:
        reports = [run_trial(spec, t) for t in trials]
    return reports, summarize(spec, reports)


def summarize(spec: ExperimentSpec, reports: list[TrialReport]) -> dict:
    errors = np.array([r.error for r in reports])
    finite = errors[np.isfinite(errors)]

    def quantile(q: float) -> float:
        return float(np.quantile(finite, q)) if finite.size else math.inf

    summary = {
        "schema_version": SCHEMA_VERSION,
        "protocol": spec.protocol,
        "spec": {
            "topology": spec.topology, "n": spec.n, "m": spec.m, "dist": spec.dist,
            "eps": spec.eps, "trials": spec.trials, "seed": spec.seed, "p": spec.p,
            "t1": spec.t1, "t2": spec.t2, "tokens": spec.tokens, "mode": spec.mode,
            "codec": spec.codec,
        },
        "success_rate": sum(r.success for r in reports) / len(reports),
        "error_p50": quantile(0.5),
        "error_p90": quantile(0.9),
        "error_max": float(errors.max()) if errors.size else 0.0,
        "max_edge_bits_mean": float(np.mean([r.max_edge_bits for r in reports])),
        "max_edge_bits_max": int(max(r.max_edge_bits for r in reports)),
        "total_bits_mean": float(np.mean([r.total_bits for r in reports])),
        "rounds_max": int(max(r.rounds for r in reports)),
    }
    if spec.protocol == "hh":
        done = [r.recovered for r in reports if r.recovered is not None]
        summary["recovery_rate"] = sum(done) / len(done) if done else 1.0
    return summary


def check_summary(spec: ExperimentSpec, summary: dict) -> bool:
    """Acceptance-threshold gate used by the CLI --check flag."""
    floor = CHECK_THRESHOLDS[spec.protocol]
    ok = summary["success_rate"] >= floor
    if spec.protocol == "hh":
        ok = ok and summary.get("recovery_rate", 0.0) >= 1.0
    return ok


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path, reports: list[TrialReport]) -> None:
    """One row per trial; wall time is deliberately not a column."""
    lines = [",".join(CSV_COLUMNS)]
    for r in reports:
        row = (SCHEMA_VERSION, r.trial, r.estimate, r.exact, r.error, r.success,
               r.recovered, r.max_edge_bits, r.total_bits, r.rounds)
        lines.append(",".join(_csv_cell(v) for v in row))
    try:
        Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")
    except OSError as exc:
        raise OSError(f"cannot write CSV {path}: {exc}") from exc


def write_summary(path, summary: dict) -> None:
    try:
        Path(path).write_text(json.dumps(summary, sort_keys=True, indent=2) + "\n",
                              encoding="ascii")
    except OSError as exc:
        raise OSError(f"cannot write summary {path}: {exc}") from exc


def comm_scaling(depths=(4, 16, 64, 256), eps: float = 0.25, p: float = 1.5,
                 n: int = 200, trials: int = 8, seed: int = 0,
                 dist: str = "zipf:1.1", tokens: int = 1000) -> dict:
    """Max-communication growth of the fp_high convergecast on line graphs.

    Runs line topologies of the given diameters, averages max_edge_bits
    per sketch row, and fits bits = a + b*log2(d).  Returns per-depth
    rows plus the fit and the saving factor over the 64-bit baseline.
    """
    cfg = FpHighConfig(p=p, eps=eps)
    rows = []
    for d in depths:
        m = d + 1
        spec = ExperimentSpec(protocol="fp", topology="line", n=n, m=m, dist=dist,
                              eps=eps, trials=trials, seed=seed, p=p, tokens=tokens)
        reports, _ = run_experiment(spec)
        per_row = float(np.mean([r.max_edge_bits for r in reports])) / cfg.k
        rows.append({"d": d, "m": m, "bits_per_row": per_row,
                     "baseline_ratio": 64.0 / per_row})
    x = np.array([math.log2(r["d"]) for r in rows])
    y = np.array([r["bits_per_row"] for r in rows])
    coeffs = np.polyfit(x, y, 1)
    fitted = np.polyval(coeffs, x)
    resid = np.abs(y - fitted) / fitted
    return {
        "schema_version": SCHEMA_VERSION,
        "eps": eps, "p": p, "n": n, "k": cfg.k, "trials": trials, "seed": seed,
        "rows": rows,
        "fit": {"slope": float(coeffs[0]), "intercept": float(coeffs[1]),
                "max_rel_residual": float(resid.max())},
    }


def bench_kernels(size: int = 10**6, repeat: int = 3, seed: int = 0) -> dict:
    """Wall-time comparison of the compiled and pure-numpy kernel backends."""
    from . import kernels

    rng = np.random.default_rng(seed)
    u = rng.random(size)
    w = rng.standard_exponential(size)
    x = rng.standard_normal(size) * 100.0
    ur = rng.random(size)
    totals = np.full(4096, 1e6)
    log_b = math.log1p(0.05)

    cases = {
        "cms_symmetric": lambda f: f(0.5, math.pi * (u - 0.5), w),
        "round_to_grid": lambda f: f(x, ur, math.log(1.5), -700.0, -2048, 2048),
        "morris_add_batch": lambda f: f(np.random.default_rng(seed),
                                        np.zeros(totals.size), totals, log_b),
    }
    out = {"size": size, "repeat": repeat, "backends": {}}
    for backend in ("numba", "numpy"):
        timings = {}
        for name, call in cases.items():
            try:
                fn = kernels.impl(name, backend)
            except (KeyError, ValueError):
                timings[name] = None
                continue
            call(fn)  # warm-up / jit compile
            best = math.inf
            for _ in range(repeat):
                t0 = time.perf_counter()
                call(fn)
                best = min(best, time.perf_counter() - t0)
            timings[name] = best
        out["backends"][backend] = timings
    return out
