import math

import numpy as np
import pytest

from rwrc import BircParams, Environment, TailSpec
from rwrc.errors import PreconditionError
from rwrc.exact import log_expected_hitting_time
from rwrc.stats import (
    constant_sampler,
    default_thresholds,
    lognormal_sampler,
    pareto_sampler,
    product_tail_check,
    scaling_slope,
    tail_exponent,
)


def test_pareto_tail_index_recovered():
    rng = np.random.default_rng(1)
    x = (1.0 - rng.random(10 ** 6)) ** -2.0  # survival t^-0.5
    rep = tail_exponent(x, default_thresholds(x))
    assert rep.estimate.slope == pytest.approx(-0.5, abs=0.05)
    assert rep.alpha == pytest.approx(0.5, abs=0.05)
    assert rep.hill_alpha == pytest.approx(0.5, abs=0.05)
    assert rep.hill_k == 1000
    assert rep.estimate.stderr < 0.05


def test_mixture_tail_tracks_heavier_component():
    rng = np.random.default_rng(2)
    u, b = rng.random(10 ** 6), rng.random(10 ** 6)
    x = np.where(b < 0.5, (1.0 - u) ** (-1.0 / 0.4), (1.0 - u) ** (-1.0 / 3.0))
    rep = tail_exponent(x, default_thresholds(x))
    assert rep.alpha == pytest.approx(0.4, abs=0.05)


def test_tail_exponent_scale_invariance_of_slope():
    rng = np.random.default_rng(3)
    x = (1.0 - rng.random(10 ** 5)) ** (-1.0 / 0.8)
    r1 = tail_exponent(x, default_thresholds(x))
    r2 = tail_exponent(100.0 * x, default_thresholds(100.0 * x))
    assert r2.estimate.slope == pytest.approx(r1.estimate.slope, abs=1e-9)
    assert r2.hill_alpha == pytest.approx(r1.hill_alpha, rel=1e-12)


def test_tail_exponent_error_paths():
    rng = np.random.default_rng(4)
    x = (1.0 - rng.random(5000)) ** -2.0
    with pytest.raises(PreconditionError):
        tail_exponent(x[:100], default_thresholds(x))  # too few samples
    with pytest.raises(PreconditionError):
        tail_exponent(x, np.array([3.0, 2.0, 4.0]))  # not increasing
    with pytest.raises(PreconditionError):
        tail_exponent(x, np.array([x.max() * 2, x.max() * 3, x.max() * 4]))
    with pytest.raises(PreconditionError):
        tail_exponent(np.concatenate((x, [-1.0])), default_thresholds(x))
    with pytest.raises(PreconditionError):
        default_thresholds(np.ones(5000))  # constant samples


def test_scaling_slope_exact_power_law():
    pts = [(float(n), 3.0 * float(n) ** 2) for n in (8, 16, 32, 64, 128)]
    est = scaling_slope(pts)
    assert est.slope == pytest.approx(2.0, abs=1e-12)
    assert est.stderr < 1e-8
    assert est.intercept == pytest.approx(math.log(3.0), abs=1e-10)
    assert np.array_equal(est.grid, [8.0, 16.0, 32.0, 64.0, 128.0])


def test_scaling_slope_error_paths():
    with pytest.raises(PreconditionError):
        scaling_slope([(1.0, 1.0), (2.0, 2.0)])
    with pytest.raises(PreconditionError):
        scaling_slope([(2.0, 1.0), (1.0, 2.0), (3.0, 3.0)])
    with pytest.raises(PreconditionError):
        scaling_slope([(1.0, 1.0), (2.0, -2.0), (3.0, 3.0)])


def test_scaling_slope_on_quenched_hitting_times():
    # ballistic point mass: E[T_n] grows linearly, so the log-log slope is 1
    env = Environment(BircParams(1.0, TailSpec.point_mass()), (-8, 8), seed=0)
    ns = [2 ** k for k in range(6, 15)]
    pts = [(n, math.exp(log_expected_hitting_time(env, n))) for n in ns]
    est = scaling_slope(pts)
    assert est.slope == pytest.approx(1.0, abs=0.02)


def test_product_with_constant_is_identity():
    r = product_tail_check(0.6, constant_sampler(1.0), 10 ** 5, seed=5)
    assert r.alpha_y == math.inf
    assert r.alpha_y_bound_ok
    assert r.alpha_xy == pytest.approx(r.alpha_x, abs=1e-12)


def test_product_with_lighter_tails_preserves_index():
    for sampler in (lognormal_sampler(1.0), pareto_sampler(2.0)):
        r = product_tail_check(0.6, sampler, 10 ** 5, seed=6)
        assert r.alpha_y_bound_ok
        assert r.alpha_xy == pytest.approx(0.6, abs=0.1)
        assert r.alpha_x == pytest.approx(0.6, abs=0.1)


def test_product_flags_heavier_y():
    # Y as heavy as X violates the lighter-tail hypothesis
    r = product_tail_check(2.0, pareto_sampler(0.5), 10 ** 5, seed=7)
    assert not r.alpha_y_bound_ok


def test_sampler_validation():
    with pytest.raises(PreconditionError):
        constant_sampler(0.0)
    with pytest.raises(PreconditionError):
        pareto_sampler(-1.0)
    with pytest.raises(PreconditionError):
        lognormal_sampler(0.0)
    with pytest.raises(PreconditionError):
        product_tail_check(0.5, constant_sampler(1.0), 10 ** 3, seed=1)
