"""Acceptance suite: twelve checks covering the package's headline claims.

Each test prints one [PASS]/[FAIL] line with the measured numbers (visible
under ``pytest -s``).  Every check runs at a fixed master seed, so outcomes
are reproducible run to run; thread counts only change wall time.
"""

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy import stats as sps

from rwrc import BircParams, Environment, R1mParams, TailSpec, _rng
from rwrc.cli import main
from rwrc.environment import (
    environment_seed,
    sample_log_rho0,
    sample_side_sums,
)
from rwrc.exact import (
    annealed_velocity,
    expected_hitting_time,
    expected_hitting_time_oracle,
    log_expected_hitting_time,
    oracle_left_cut,
    trap_census,
)
from rwrc.stats import (
    default_thresholds,
    lognormal_sampler,
    pareto_sampler,
    product_tail_check,
    scaling_slope,
    tail_exponent,
)
from rwrc.walk import backtrack_statistic, crossing_attempts, final_position, simulate_hitting_times

THREADS = 8
GRID = [2 ** k for k in range(8, 16)]

BIRC_HEAVY_UP = BircParams(1.0, TailSpec(0.5, math.inf))       # heavy conductances
BIRC_BOTH = BircParams(1.0, TailSpec(0.5, 0.5, 0.5))           # heavy on both sides
R1M_SUB = R1mParams(0.25, 0.5)                                 # alpha = 2/3
POINT = TailSpec.point_mass()


def _report(num: int, ok: bool, detail: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] criterion {num:2d}: {detail}")
    assert ok, f"criterion {num}: {detail}"


def _mean_log_slope(params, n_envs, master, ns=GRID):
    def work(e):
        env = Environment(params, (-64, 64), environment_seed(master, e))
        return [log_expected_hitting_time(env, n) for n in ns]

    with ThreadPoolExecutor(THREADS) as ex:
        logs = np.array(list(ex.map(work, range(n_envs))))
    geo = np.exp(logs.mean(axis=0))
    return scaling_slope(list(zip(ns, geo))).slope


def test_criterion_01_formula_matches_reflected_chain_oracle():
    # two independent routes to E[T_n]: the conductance formula against a
    # reflected-chain linear solve with a certified left cut
    worst = 0.0
    for params, master in ((BIRC_BOTH, 51), (R1M_SUB, 52)):
        for e in range(100):
            env = Environment(params, (-8, 8), environment_seed(master, e))
            for n in (1, 2, 4, 8, 16, 32, 64):
                et = expected_hitting_time(env, n)
                lc, cert = oracle_left_cut(env, n, cert_tol=1e-10)
                assert cert <= 1e-10
                worst = max(worst, abs(expected_hitting_time_oracle(env, n, lc) - et) / et)
    _report(1, worst <= 1e-8,
            f"formula vs oracle over 200 environments x 7 levels, worst rel diff {worst:.2e}")


def test_criterion_02_monte_carlo_matches_quenched_expectation():
    n, reps, n_envs = 32, 10 ** 4, 20
    lines = []
    all_ok = True
    for params, master in ((BIRC_HEAVY_UP, 101), (R1M_SUB, 102)):
        envs = [Environment(params, (-64, 64), environment_seed(master, e))
                for e in range(n_envs)]
        exact = [expected_hitting_time(env, n) for env in envs]

        def work(task):
            e, r0, m = task
            out = np.empty(m)
            for i in range(m):
                key = _rng.derive_key(master, 29, e, r0 + i)
                out[i] = simulate_hitting_times(envs[e], [n], key).hit_times[n]
            return out

        block = 250
        tasks = [(e, r0, min(block, reps - r0))
                 for e in range(n_envs) for r0 in range(0, reps, block)]
        with ThreadPoolExecutor(THREADS) as ex:
            parts = list(ex.map(work, tasks))
        times = np.concatenate(parts).reshape(n_envs, reps)
        zs = [(times[e].mean() - exact[e]) / (times[e].std(ddof=1) / math.sqrt(reps))
              for e in range(n_envs)]
        good = sum(abs(z) <= 4.0 for z in zs)
        all_ok &= good >= 19
        lines.append(f"{params.model} {good}/{n_envs} within 4 SE (max |z| {max(map(abs, zs)):.2f})")
    _report(2, all_ok, "; ".join(lines))


def test_criterion_03_heavy_tail_slows_growth_to_square_law():
    slope = _mean_log_slope(BIRC_HEAVY_UP, 50, 2024)
    _report(3, 1.5 <= slope <= 2.5,
            f"log E[T_n] vs log n slope {slope:.3f} over n in [2^8, 2^15], 50 environments")


def test_criterion_04_exponent_does_not_depend_on_bias():
    tails = BIRC_HEAVY_UP.tails
    s_half = _mean_log_slope(BircParams(0.5, tails), 50, 2024)
    s_two = _mean_log_slope(BircParams(2.0, tails), 50, 2024)
    _report(4, abs(s_half - s_two) <= 0.3,
            f"slopes at bias 0.5 and 2.0: {s_half:.3f} vs {s_two:.3f} "
            f"(difference {abs(s_half - s_two):.3f})")


def test_criterion_05_mott_exponent_tracks_the_field():
    reps, wins = 10, 0
    in_band = True
    slopes = []
    for rep in range(reps):
        s_low = _mean_log_slope(R1mParams(0.25, 0.5), 30, 3000 + rep)
        s_high = _mean_log_slope(R1mParams(0.4, 0.5), 30, 3100 + rep)
        slopes.append((s_low, s_high))
        in_band &= 1.2 <= s_low <= 1.8 and 0.95 <= s_high <= 1.45
        wins += s_low > s_high
    lo = np.mean([s for s, _ in slopes])
    hi = np.mean([s for _, s in slopes])
    _report(5, in_band and wins >= 9,
            f"slopes mean {lo:.3f} (field 0.25) vs {hi:.3f} (field 0.4), "
            f"ordered in {wins}/{reps} repetitions, all inside their bands: {in_band}")


def test_criterion_06_ballistic_velocity_both_models():
    steps = 10 ** 6
    env_b = Environment(BircParams(0.5, POINT), (-64, 64), seed=0)
    v_b = final_position(env_b, steps, seed=1) / steps
    want_b = annealed_velocity(BircParams(0.5, POINT)).v
    ok_b = abs(v_b - want_b) / want_b <= 0.01

    r1m = R1mParams(0.7, 0.25)
    env_r = Environment(r1m, (-64, 64), seed=2)
    v_r = final_position(env_r, steps, seed=3) / steps
    want_r = annealed_velocity(r1m).v
    ok_r = abs(v_r - want_r) / want_r <= 0.05
    _report(6, ok_b and ok_r,
            f"birc {v_b:.4f} vs {want_b:.4f} (1% band); r1m {v_r:.4f} vs {want_r:.4f} (5% band)")


def test_criterion_07_product_with_lighter_tail_keeps_the_index():
    worst = 0.0
    ok = True
    for alpha in (0.4, 0.6, 0.9):
        for name, sampler in (("lognormal", lognormal_sampler(1.0)),
                              ("pareto(2)", pareto_sampler(2.0))):
            r = product_tail_check(alpha, sampler, 10 ** 6, seed=int(alpha * 100) + len(name))
            ok &= abs(r.alpha_xy - alpha) <= 0.1 and r.alpha_y_bound_ok
            worst = max(worst, abs(r.alpha_xy - alpha))
    _report(7, ok, f"six (alpha, lighter-tail) pairs at 10^6 samples, "
                   f"worst |fitted - alpha| {worst:.3f} (band 0.1)")


def test_criterion_08_landscape_tail_indices():
    count, master = 10 ** 6, 424242
    checks = []
    ok = True
    for params, target in ((BIRC_BOTH, 0.5), (R1M_SUB, 2.0 / 3.0)):
        rho = np.exp(sample_log_rho0(params, count, master))
        f_rho = tail_exponent(rho, default_thresholds(rho)).alpha
        left = sample_side_sums(params, count, master, "left")
        f_left = tail_exponent(left, default_thresholds(left)).alpha
        right = sample_side_sums(params, count, master, "right")
        f_right = tail_exponent(right, default_thresholds(right)).alpha
        ok &= abs(f_rho - target) <= 0.1 and abs(f_right - target) <= 0.1
        if params.model == "birc":
            ok &= abs(f_left - target) <= 0.1  # two-sided: the tail is exact
        else:
            ok &= f_left >= target - 0.1  # one-sided: only an upper tail bound
        checks.append(f"{params.model} rho0 {f_rho:.3f} left {f_left:.3f} "
                      f"right {f_right:.3f} (target {target:.3f})")
    _report(8, ok, "; ".join(checks))


def test_criterion_09_deep_traps_are_frequent():
    params = BircParams(0.5, TailSpec(0.5, 0.5, 0.5))
    n, hits = 4096, 0
    counts = []
    for e in range(100):
        env = Environment(params, (-4, n), environment_seed(777, e))
        c = trap_census(env, n, eps=0.5, alpha=0.5).count
        counts.append(c)
        hits += c >= 4
    _report(9, hits >= 95,
            f"{hits}/100 environments hold >= 4 deep traps over [1, 4096] "
            f"(median census {np.median(counts):.0f})")


def test_criterion_10_crossing_attempts_are_geometric():
    env = Environment(BircParams(0.8, TailSpec(0.9, 0.9, 0.5)), (-64, 16), seed=31)
    pvals = []
    for k in range(10):
        st = crossing_attempts(env, k, seed=_rng.derive_key(555, k), replicas=20000)
        a, w = st.attempts, float(env.transition_prob(k))
        m = 1
        while a.size * (1.0 - w) ** m * w >= 5.0 and m < 60:
            m += 1
        obs = np.bincount(np.minimum(a, m + 1), minlength=m + 2)[1:]
        probs = np.array([w * (1.0 - w) ** (j - 1) for j in range(1, m + 1)]
                         + [(1.0 - w) ** m])
        pvals.append(float(sps.chisquare(obs, a.size * probs).pvalue))
    _report(10, min(pvals) > 0.01,
            f"geometric fit not rejected at 1% on any of 10 edges "
            f"(min p {min(pvals):.3f})")


def test_criterion_11_no_deep_backtracking_after_hits():
    env = Environment(BircParams(1.0, POINT), (-8, 1024), seed=0)

    def work(s):
        return backtrack_statistic(env, n=1000, horizon=10 ** 6,
                                   seed=_rng.derive_key(888, s))

    with ThreadPoolExecutor(THREADS) as ex:
        results = list(ex.map(work, range(100)))
    applicable = [r for r in results if r.applicable]
    small = sum(r.deficit <= 5.0 for r in applicable)
    nonneg = all(r.min_after_hit >= 0 for r in applicable)
    ok = len(applicable) == 100 and small >= 99 and nonneg
    _report(11, ok,
            f"deficit <= 5 in {small}/{len(applicable)} runs, "
            f"worst {max(r.deficit for r in applicable):.3f}, "
            f"position never negative: {nonneg}")


def test_criterion_12_thread_count_never_changes_output(tmp_path):
    cfg = tmp_path / "sim.cfg"
    cfg.write_text(
        "model = birc\nmodel.delta = 1.0\nmodel.alpha_inf = 0.5\n"
        "model.alpha_zero = 0.5\nmodel.weight_inf = 0.5\n"
        "levels = 1,2,4,8,16,32\nenvironments = 4\nreplicas = 8\nmaster_seed = 12\n"
    )
    one, eight = tmp_path / "t1.csv", tmp_path / "t8.csv"
    assert main(["simulate", "--config", str(cfg), "--out", str(one), "--threads", "1"]) == 0
    assert main(["simulate", "--config", str(cfg), "--out", str(eight), "--threads", "8"]) == 0
    same = one.read_bytes() == eight.read_bytes()
    _report(12, same, f"simulate with 1 and 8 threads: outputs byte-identical = {same}")
