"""Stable sampling: moments, tails, medians, and sketch materialization."""

import math

import numpy as np
import pytest
from scipy import stats

from sketchcast.stable import (
    MAX_SKETCH_CELLS,
    MEDIAN_SKEWED_STANDARD,
    StableParams,
    build_sketch,
    median_abs,
    montecarlo_median_abs,
    sample_stable,
    sample_stable_array,
)


def draws(p, beta=0.0, gamma_scale=1.0, delta_loc=0.0, size=10**6, seed=0):
    params = StableParams(p=p, beta=beta, gamma_scale=gamma_scale, delta_loc=delta_loc)
    return sample_stable_array(params, np.random.default_rng(seed), size)


def test_params_validation():
    with pytest.raises(ValueError):
        StableParams(p=0.0)
    with pytest.raises(ValueError):
        StableParams(p=2.5)
    with pytest.raises(ValueError):
        StableParams(p=1.0, beta=1.5)
    with pytest.raises(ValueError):
        StableParams(p=1.0, gamma_scale=0.0)
    with pytest.raises(ValueError):
        StableParams(p=1.5, beta=-1.0)  # skew only at p=1


def test_gaussian_case_has_variance_two():
    z = draws(2.0, size=10**5, seed=1)
    assert abs(z.mean()) < 0.02
    assert abs(z.var() - 2.0) < 0.06


def test_cauchy_case_is_centered():
    z = draws(1.0, size=10**5, seed=2)
    assert abs(np.median(z)) < 0.03


def test_symmetric_location_shift():
    z = draws(2.0, delta_loc=3.0, size=10**5, seed=3)
    assert abs(np.median(z) - 3.0) < 0.03


def test_half_stable_tail_decay_rate():
    z = np.abs(draws(0.5, size=10**6, seed=4))
    scaled = [np.mean(z > lam) * math.sqrt(lam) for lam in (10.0, 100.0, 1000.0)]
    assert max(scaled) < 2 * min(scaled)


@pytest.mark.parametrize("p", [0.5, 1.5])
def test_tail_log_log_slope_near_minus_p(p):
    z = np.abs(draws(p, size=10**6, seed=5))
    lams = np.geomspace(10.0, 1000.0, 5)
    fracs = np.array([np.mean(z > lam) for lam in lams])
    assert np.all(np.diff(fracs) < 0)
    slope = np.polyfit(np.log(lams), np.log(fracs), 1)[0]
    assert abs(slope + p) < 0.15


def test_one_stability_additivity():
    x = np.array([0.3, 1.2, 2.0, 0.5])
    rng = np.random.default_rng(6)
    params = StableParams(p=1.0)
    parts = sample_stable_array(params, rng, 4 * 10**5).reshape(4, 10**5)
    combined = x @ parts
    reference = x.sum() * sample_stable_array(params, rng, 10**5)
    assert stats.ks_2samp(combined, reference).pvalue >= 0.01


def test_median_abs_analytic_points():
    assert median_abs(1.0) == 1.0
    assert math.isclose(median_abs(2.0), math.sqrt(2.0) * stats.norm.ppf(0.75), rel_tol=1e-9)
    assert math.isclose(median_abs(2.0), 0.9539, rel_tol=1e-3)


def test_median_abs_pinned_points():
    assert median_abs(0.5) == 1.284163
    assert median_abs(0.25) == 2.537526
    assert median_abs(1.5) == 0.968694


def test_median_abs_off_grid_is_deterministic_and_ordered():
    # Falls back to fixed-seed Monte Carlo; theta_p decreases in p here.
    assert montecarlo_median_abs(0.6, samples=10**6) == montecarlo_median_abs(0.6, samples=10**6)
    assert median_abs(0.75) < median_abs(0.6) < median_abs(0.5)


@pytest.mark.parametrize("p", [0.5, 1.5])
def test_median_abs_is_a_fixed_point(p):
    z = np.abs(draws(p, size=10**6, seed=7))
    frac = np.mean(z < median_abs(p))
    assert 0.497 <= frac <= 0.503


def test_skewed_log_mgf_is_t_log_t():
    # At gamma = pi/2, beta = -1: E[exp(t Z)] = exp(t ln t).
    z = draws(1.0, beta=-1.0, gamma_scale=math.pi / 2, size=10**6, seed=8)
    assert abs(np.mean(np.exp(z)) - 1.0) < 0.01
    assert abs(np.mean(np.exp(0.5 * z)) - 2.0**-0.5) < 0.01
    assert abs(np.mean(np.exp(2.0 * z)) - 4.0) < 0.15


def test_skewed_standard_median_pin():
    z = draws(1.0, beta=-1.0, gamma_scale=math.pi / 2, size=10**6, seed=9)
    assert abs(np.median(z) - MEDIAN_SKEWED_STANDARD) < 0.01


def test_skewed_location_enters_negated():
    h = 1.7
    z = draws(1.0, beta=-1.0, gamma_scale=math.pi / 2, delta_loc=h, size=10**6, seed=10)
    assert abs(np.median(z) - (MEDIAN_SKEWED_STANDARD - h)) < 0.02


def test_sample_stable_scalar_matches_array_head():
    params = StableParams(p=1.5)
    a = sample_stable(params, np.random.default_rng(11))
    b = sample_stable_array(params, np.random.default_rng(11), 1)[0]
    assert a == b


def test_build_sketch_is_deterministic():
    a = build_sketch(2, 3, 1.0, 1e-6, seed=0)
    b = build_sketch(2, 3, 1.0, 1e-6, seed=0)
    assert np.array_equal(a.entries, b.entries)
    assert not np.array_equal(a.entries, build_sketch(2, 3, 1.0, 1e-6, seed=1).entries)


def test_build_sketch_entries_are_integral():
    sk = build_sketch(20, 30, 1.5, 2.0**-20, seed=2)
    assert np.array_equal(sk.entries, np.rint(sk.entries))
    assert np.array_equal(sk.scaled(), sk.entries * 2.0**-20)


def test_unit_eta_rounds_small_draws_to_zero():
    sk = build_sketch(40, 40, 2.0, 1.0, seed=3)
    assert np.array_equal(sk.entries, np.rint(sk.entries))
    # P(|N(0, sqrt(2))| < 1/2) is about 0.28; at 1600 cells zeros must show up.
    assert np.mean(sk.entries == 0.0) > 0.15


def test_build_sketch_distribution_matches_sampler():
    sk = build_sketch(100, 10**4, 1.5, 2.0**-30, seed=4)
    reference = draws(1.5, size=10**5, seed=12)
    result = stats.ks_2samp(sk.scaled().ravel(), reference)
    assert result.pvalue >= 0.01


def test_build_sketch_capacity_cap():
    k = int(math.isqrt(MAX_SKETCH_CELLS)) + 1
    with pytest.raises(MemoryError):
        build_sketch(k, k + 2, 1.5, 2.0**-30, seed=0)


def test_entry_cap_clips_scaled_magnitude():
    sk = build_sketch(50, 50, 0.25, 2.0**-20, seed=5, entry_cap=10.0)
    assert np.max(np.abs(sk.scaled())) <= 10.0 + 2.0**-20


def test_build_sketch_validates_arguments():
    with pytest.raises(ValueError):
        build_sketch(0, 5, 1.5, 2.0**-30, seed=0)
    with pytest.raises(ValueError):
        build_sketch(5, 5, 1.5, 0.0, seed=0)
    with pytest.raises(ValueError):
        build_sketch(5, 5, 1.5, 2.0, seed=0)
