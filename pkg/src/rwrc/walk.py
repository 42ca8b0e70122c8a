"""Quenched Monte Carlo engine: direct step-by-step simulation.

Kernels are numba-compiled and release the GIL, so replicas parallelize
across threads.  Each replica's randomness is a pure function of its key and
its step counter, which makes runs resumable: when a trajectory wanders past
the materialized environment window, the kernel returns, the wrapper extends
the window, and the kernel continues mid-walk with no change to the sampled
path.  Results are therefore identical for any thread count and any window
growth schedule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from ._rng import derive_key, uniform_nb
from .environment import Environment
from .errors import PreconditionError

DEFAULT_STEP_CAP = 10 ** 9

# kernel exit statuses
_DONE = 0
_CAPPED = 1
_NEED_LEFT = 2
_NEED_RIGHT = 3

# slots of the resumable state vector
_X, _T, _LI, _NC, _NEXT_CP, _MAX_X, _MIN_X = range(7)
_STATE_LEN = 7


@dataclass(frozen=True)
class TrajectorySummary:
    checkpoints: list[tuple[int, int]]   # (step count t, position X_t)
    max_position: int
    hit_times: dict[int, int]            # level -> T_level, for levels reached
    capped: bool
    total_steps: int


@dataclass(frozen=True)
class CrossingStats:
    edge: int
    attempts: np.ndarray  # one count per replica


@dataclass(frozen=True)
class BacktrackResult:
    applicable: bool                     # False when the run hit the step cap
    hit_time: int | None = None
    min_after_hit: int | None = None
    deficit: float | None = None         # (n - min) / log n


@numba.njit(cache=True, nogil=True)
def _levels_kernel(omega, lo, key, step_cap, levels, hit_steps, cp_t, cp_x, state):
    """Advance until every level is hit, the cap is reached, or the walk
    exits the window on the left.  Resumable via `state`."""
    x = state[_X]
    t = state[_T]
    li = state[_LI]
    nc = state[_NC]
    next_cp = state[_NEXT_CP]
    mx = state[_MAX_X]
    nlev = levels.shape[0]
    status = _DONE
    while li < nlev:
        if t >= step_cap:
            status = _CAPPED
            break
        if x < lo:
            status = _NEED_LEFT
            break
        if uniform_nb(key, np.uint64(t)) < omega[x - lo]:
            x += 1
        else:
            x -= 1
        t += 1
        if x > mx:
            mx = x
        if t == next_cp:
            cp_t[nc] = t
            cp_x[nc] = x
            nc += 1
            next_cp *= 2
        if x == levels[li]:
            hit_steps[li] = t
            cp_t[nc] = t
            cp_x[nc] = x
            nc += 1
            li += 1
    state[_X] = x
    state[_T] = t
    state[_LI] = li
    state[_NC] = nc
    state[_NEXT_CP] = next_cp
    state[_MAX_X] = mx
    return status


@numba.njit(cache=True, nogil=True)
def _horizon_kernel(omega, lo, key, t_end, cp_t, cp_x, state):
    """Advance to a fixed step count, tracking extremes.  Resumable."""
    x = state[_X]
    t = state[_T]
    nc = state[_NC]
    next_cp = state[_NEXT_CP]
    mx = state[_MAX_X]
    mn = state[_MIN_X]
    hi = lo + omega.shape[0] - 1
    status = _DONE
    while t < t_end:
        if x < lo:
            status = _NEED_LEFT
            break
        if x > hi:
            status = _NEED_RIGHT
            break
        if uniform_nb(key, np.uint64(t)) < omega[x - lo]:
            x += 1
        else:
            x -= 1
        t += 1
        if x > mx:
            mx = x
        if x < mn:
            mn = x
        if t == next_cp:
            cp_t[nc] = t
            cp_x[nc] = x
            nc += 1
            next_cp *= 2
    state[_X] = x
    state[_T] = t
    state[_NC] = nc
    state[_NEXT_CP] = next_cp
    state[_MAX_X] = mx
    state[_MIN_X] = mn
    return status


@numba.njit(cache=True, nogil=True)
def _crossing_kernel(omega, lo, site, key, step_cap, state):
    """Count visits to `site` until the first step site -> site + 1.
    The walk never exceeds `site`, so only left window exits can occur."""
    x = state[0]
    t = state[1]
    a = state[2]
    status = _DONE
    while True:
        if t >= step_cap:
            status = _CAPPED
            break
        if x < lo:
            status = _NEED_LEFT
            break
        u = uniform_nb(key, np.uint64(t))
        t += 1
        if x == site:
            a += 1
            if u < omega[x - lo]:
                break
            x -= 1
        elif u < omega[x - lo]:
            x += 1
        else:
            x -= 1
    state[0] = x
    state[1] = t
    state[2] = a
    return status


def _omega_slice(env: Environment, lo: int, hi: int) -> np.ndarray:
    return np.ascontiguousarray(
        env.transition_prob(np.arange(lo, hi + 1, dtype=np.int64))
    )


def _grow_left(lo: int, hi: int) -> int:
    return lo - max(64, hi - lo + 1)


def simulate_hitting_times(
    env: Environment,
    levels,
    seed: int,
    step_cap: int = DEFAULT_STEP_CAP,
) -> TrajectorySummary:
    """Walk from X_0 = 0 recording the first visit time of each level.

    Checkpoints are taken at steps 1, 2, 4, 8, ... and at every level hit.
    Stops early with capped = True when step_cap is exhausted.  Deterministic
    in (env, seed): thread count and window growth do not affect the path.
    """
    levels = np.asarray(levels, dtype=np.int64)
    if levels.size == 0 or levels[0] <= 0 or np.any(np.diff(levels) <= 0):
        raise PreconditionError("levels must be nonempty, positive, increasing")
    if step_cap <= 0:
        raise PreconditionError("step_cap must be positive")
    key = derive_key(seed)
    state = np.zeros(_STATE_LEN, dtype=np.int64)
    state[_NEXT_CP] = 1
    hit_steps = np.full(levels.size, -1, dtype=np.int64)
    n_cp = levels.size + 80  # 63 doublings fit comfortably
    cp_t = np.zeros(n_cp, dtype=np.int64)
    cp_x = np.zeros(n_cp, dtype=np.int64)
    lo, hi = -64, int(levels[-1])
    while True:
        omega = _omega_slice(env, lo, hi)
        status = _levels_kernel(omega, lo, key, step_cap, levels,
                                hit_steps, cp_t, cp_x, state)
        if status != _NEED_LEFT:
            break
        lo = _grow_left(lo, hi)
    checkpoints = [(0, 0)]
    for i in range(state[_NC]):
        pair = (int(cp_t[i]), int(cp_x[i]))
        if pair != checkpoints[-1]:
            checkpoints.append(pair)
    hits = {int(levels[i]): int(hit_steps[i])
            for i in range(levels.size) if hit_steps[i] >= 0}
    return TrajectorySummary(
        checkpoints=checkpoints,
        max_position=int(state[_MAX_X]),
        hit_times=hits,
        capped=status == _CAPPED,
        total_steps=int(state[_T]),
    )


def _run_horizon(env: Environment, key, state: np.ndarray, t_end: int,
                 cp_t: np.ndarray, cp_x: np.ndarray,
                 lo: int, hi: int) -> tuple[int, int]:
    """Drive the horizon kernel, growing the window as needed."""
    while True:
        omega = _omega_slice(env, lo, hi)
        status = _horizon_kernel(omega, lo, key, t_end, cp_t, cp_x, state)
        if status == _NEED_LEFT:
            lo = _grow_left(lo, hi)
        elif status == _NEED_RIGHT:
            hi = hi + max(64, hi - lo + 1)
        else:
            return lo, hi


def trajectory_exponent(env: Environment, steps: int, seed: int) -> list[tuple[int, float]]:
    """Sample log(max(X_t, 1)) / log t at t = 2, 4, 8, ... up to `steps`."""
    if steps < 100:
        raise PreconditionError("steps must be >= 100")
    key = derive_key(seed)
    state = np.zeros(_STATE_LEN, dtype=np.int64)
    state[_NEXT_CP] = 1
    cp_t = np.zeros(80, dtype=np.int64)
    cp_x = np.zeros(80, dtype=np.int64)
    _run_horizon(env, key, state, steps, cp_t, cp_x, lo=-64, hi=64)
    out = []
    for i in range(state[_NC]):
        t = int(cp_t[i])
        if t >= 2:
            out.append((t, math.log(max(int(cp_x[i]), 1)) / math.log(t)))
    return out


def final_position(env: Environment, steps: int, seed: int) -> int:
    """Position X_steps of a single trajectory (velocity experiments)."""
    if steps < 1:
        raise PreconditionError("steps must be >= 1")
    key = derive_key(seed)
    state = np.zeros(_STATE_LEN, dtype=np.int64)
    state[_NEXT_CP] = 1
    cp_t = np.zeros(80, dtype=np.int64)
    cp_x = np.zeros(80, dtype=np.int64)
    _run_horizon(env, key, state, steps, cp_t, cp_x, lo=-64, hi=64)
    return int(state[_X])


def backtrack_statistic(
    env: Environment,
    n: int,
    horizon: int,
    seed: int,
    step_cap: int = DEFAULT_STEP_CAP,
) -> BacktrackResult:
    """How far below n the walk drops within `horizon` steps after T_n.

    deficit = (n - min_{0 <= k <= horizon} X_{T_n + k}) / log n; a capped
    run (T_n not reached) gives an inapplicable result rather than an error.
    """
    if n < 2:
        raise PreconditionError("n must be >= 2 (log n must be positive)")
    if horizon < 1:
        raise PreconditionError("horizon must be >= 1")
    key = derive_key(seed)
    state = np.zeros(_STATE_LEN, dtype=np.int64)
    state[_NEXT_CP] = 1
    levels = np.asarray([n], dtype=np.int64)
    hit_steps = np.full(1, -1, dtype=np.int64)
    n_cp = 160
    cp_t = np.zeros(n_cp, dtype=np.int64)
    cp_x = np.zeros(n_cp, dtype=np.int64)
    lo, hi = -64, n
    while True:
        omega = _omega_slice(env, lo, hi)
        status = _levels_kernel(omega, lo, key, step_cap, levels,
                                hit_steps, cp_t, cp_x, state)
        if status != _NEED_LEFT:
            break
        lo = _grow_left(lo, hi)
    if status == _CAPPED:
        return BacktrackResult(applicable=False)
    hit_time = int(state[_T])
    # continue the same trajectory for `horizon` more steps, tracking the min
    state[_MIN_X] = state[_X]
    _run_horizon(env, key, state, hit_time + horizon, cp_t, cp_x, lo, hi)
    min_after = int(state[_MIN_X])
    return BacktrackResult(
        applicable=True,
        hit_time=hit_time,
        min_after_hit=min_after,
        deficit=(n - min_after) / math.log(n),
    )


def crossing_attempts(
    env: Environment,
    k: int,
    seed: int,
    replicas: int,
    step_cap: int = DEFAULT_STEP_CAP,
) -> CrossingStats:
    """Visits to site k before the edge {k, k+1} is first crossed, one count
    per replica, started at k (the clock starts at the first visit)."""
    if replicas < 1:
        raise PreconditionError("replicas must be >= 1")
    counts = np.empty(replicas, dtype=np.int64)
    lo = k - 64
    for r in range(replicas):
        key = derive_key(seed, r)
        state = np.array([k, 0, 0], dtype=np.int64)
        while True:
            omega = _omega_slice(env, lo, k)
            status = _crossing_kernel(omega, lo, k, key, step_cap, state)
            if status != _NEED_LEFT:
                break
            lo = _grow_left(lo, k)
        if status == _CAPPED:
            raise RuntimeError(
                f"crossing replica {r} exceeded {step_cap} steps; "
                "the environment traps too deeply at this edge"
            )
        counts[r] = state[2]
    return CrossingStats(edge=k, attempts=counts)
