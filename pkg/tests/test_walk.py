import math

import numpy as np
import pytest

from rwrc import BircParams, Environment, R1mParams, TailSpec
from rwrc.environment import environment_seed
from rwrc.errors import PreconditionError
from rwrc.exact import expected_hitting_time
from rwrc.walk import (
    backtrack_statistic,
    crossing_attempts,
    final_position,
    simulate_hitting_times,
    trajectory_exponent,
)

POINT = TailSpec.point_mass()


def strong_drift_env(seed=0):
    # omega = expit(2 * 17.3) ~ 1 - 1e-15: the walk is effectively deterministic
    return Environment(BircParams(17.3, POINT), (-8, 64), seed=seed)


def test_deterministic_walk_hits_levels_at_their_distance():
    env = strong_drift_env()
    s = simulate_hitting_times(env, [1, 2, 5, 10], seed=3)
    assert s.hit_times == {1: 1, 2: 2, 5: 5, 10: 10}
    assert not s.capped
    assert s.total_steps == 10
    assert s.max_position == 10


def test_hitting_times_are_reproducible():
    env = Environment(BircParams(0.5, TailSpec(0.5, 0.5, 0.5)), (-8, 64), seed=5)
    a = simulate_hitting_times(env, [1, 4, 16], seed=11)
    b = simulate_hitting_times(env, [1, 4, 16], seed=11)
    assert a.hit_times == b.hit_times
    assert a.checkpoints == b.checkpoints
    c = simulate_hitting_times(env, [1, 4, 16], seed=12)
    assert c.hit_times != a.hit_times  # another replica takes another path


def test_hit_times_increase_with_level_and_position_matches():
    env = Environment(BircParams(0.8, TailSpec(1.5, math.inf)), (-8, 64), seed=9)
    s = simulate_hitting_times(env, [1, 2, 4, 8, 16, 32], seed=2)
    ts = [s.hit_times[lv] for lv in (1, 2, 4, 8, 16, 32)]
    assert all(a < b for a, b in zip(ts, ts[1:]))
    assert all(t >= lv for lv, t in s.hit_times.items())  # |X| moves one per step


def test_mean_hitting_time_matches_quenched_expectation():
    env = Environment(BircParams(0.5, POINT), (-8, 64), seed=0)
    n, reps = 32, 4000
    want = expected_hitting_time(env, n)
    times = np.array(
        [simulate_hitting_times(env, [n], seed=r).hit_times[n] for r in range(reps)],
        dtype=np.float64,
    )
    se = times.std(ddof=1) / math.sqrt(reps)
    assert abs(times.mean() - want) < 4.0 * se


def test_step_cap_semantics():
    env = Environment(BircParams(0.5, POINT), (-8, 64), seed=0)
    s = simulate_hitting_times(env, [50], seed=1, step_cap=10)
    assert s.capped
    assert s.total_steps == 10
    assert 50 not in s.hit_times


def test_checkpoints_respect_speed_limit():
    env = Environment(BircParams(0.3, TailSpec(0.5, 0.5, 0.5)), (-8, 64), seed=6)
    s = simulate_hitting_times(env, [24], seed=8)
    pts = s.checkpoints
    assert pts[0] == (0, 0)
    for (t0, x0), (t1, x1) in zip(pts, pts[1:]):
        assert t1 > t0
        assert abs(x1 - x0) <= t1 - t0


def test_walk_extends_window_leftward_when_needed():
    # unbiased point mass: the walk wanders far left of the initial window
    env = Environment(BircParams(0.0, POINT), (-4, 4), seed=0)
    s = simulate_hitting_times(env, [3], seed=5, step_cap=10 ** 6)
    assert s.hit_times[3] >= 3
    assert env.window[0] < -4  # left extension happened
    again = Environment(BircParams(0.0, POINT), (-4, 4), seed=0)
    t = simulate_hitting_times(again, [3], seed=5, step_cap=10 ** 6)
    assert t.hit_times == s.hit_times  # growth schedule does not change the path


def test_final_position_tracks_velocity():
    env = Environment(BircParams(0.5, POINT), (-8, 64), seed=0)
    steps = 200000
    x = final_position(env, steps, seed=3)
    assert abs(x / steps - 0.46211715726000974) < 0.01


def test_trajectory_exponent_ballistic_limit():
    env = Environment(BircParams(1.0, POINT), (-8, 64), seed=0)
    pairs = trajectory_exponent(env, 65536, seed=4)
    ts = [t for t, _ in pairs]
    assert ts == sorted(ts)
    assert all(0.0 <= g <= 1.0 for _, g in pairs)
    assert pairs[-1][1] > 0.9  # log X_t / log t -> 1 for a ballistic walk
    with pytest.raises(PreconditionError):
        trajectory_exponent(env, 50, seed=4)


def test_crossing_attempts_geometric_mean():
    # at omega = 1/2 the number of tries to cross an edge is Geometric(1/2)
    env = Environment(BircParams(0.0, POINT), (-64, 8), seed=0)
    stats = crossing_attempts(env, 0, seed=9, replicas=4000)
    a = stats.attempts
    assert a.min() >= 1
    se = a.std(ddof=1) / math.sqrt(a.size)
    assert abs(a.mean() - 2.0) < 4.0 * se
    assert stats.edge == 0


def test_crossing_attempts_strong_drift_is_single_try():
    env = strong_drift_env()
    stats = crossing_attempts(env, 2, seed=9, replicas=64)
    assert np.all(stats.attempts == 1)


def test_backtrack_deficit_zero_under_strong_drift():
    env = strong_drift_env()
    r = backtrack_statistic(env, n=20, horizon=2000, seed=3)
    assert r.applicable
    assert r.hit_time == 20
    assert r.min_after_hit == 20
    assert r.deficit == 0.0


def test_backtrack_deficit_nonnegative_and_bounded_sanity():
    env = Environment(BircParams(1.0, TailSpec(0.5, 0.5, 0.5)), (-8, 64), seed=12)
    for rep in range(5):
        r = backtrack_statistic(env, n=50, horizon=5000, seed=rep)
        if r.applicable:
            assert r.min_after_hit <= 50
            assert r.deficit >= 0.0


def test_backtrack_capped_run_is_not_applicable():
    env = Environment(BircParams(0.5, POINT), (-8, 64), seed=0)
    r = backtrack_statistic(env, n=40, horizon=100, seed=1, step_cap=10)
    assert not r.applicable
    assert r.deficit is None


def test_r1m_walk_end_to_end():
    env = Environment(R1mParams(0.7, 0.25), (-8, 64), seed=2)
    s = simulate_hitting_times(env, [1, 8, 32], seed=6)
    assert set(s.hit_times) == {1, 8, 32}
    assert s.hit_times[32] >= 32


def test_level_validation():
    env = strong_drift_env()
    with pytest.raises(PreconditionError):
        simulate_hitting_times(env, [], seed=0)
    with pytest.raises(PreconditionError):
        simulate_hitting_times(env, [4, 2], seed=0)
    with pytest.raises(PreconditionError):
        simulate_hitting_times(env, [0, 2], seed=0)
