"""Closed-form quenched quantities from the electrical-network picture.

The walk with transition probabilities omega_k is reversible for the measure
pi(k) = c*_{k-1} + c*_k, and every question about hitting one site before
another reduces to series resistances S(i, j) = sum of 1/c*_l over i <= l <= j.
Everything here is computed in log space: individual conductances span
hundreds of orders of magnitude once tilts and heavy tails combine, so sums
use log-sum-exp and ratios are differences of logs exponentiated at the end.

Infinite sums (the left tail of the expected hitting time, resistances to
+infinity) are truncated with a certified remainder: a per-environment
high-water mark on the random prefactor, times a 10x safety factor, times
the deterministic geometric decay of the tilt.  When the bound cannot reach
the requested tolerance within a hard site cap, the operation raises instead
of silently truncating.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded
from scipy.special import expit, logsumexp

from .environment import BircParams, Environment, ModelParams, R1mParams
from .errors import CertificationError, PreconditionError

_LOG_SAFETY = math.log(10.0)
SCAN_CAP = 10 ** 6  # sites examined per one-sided tail scan before giving up

SUB_BALLISTIC = "sub-ballistic"
BALLISTIC = "ballistic"


@dataclass(frozen=True)
class HarmonicSum:
    """Series resistance S(i, j), held as a log."""

    value_log: float
    range: tuple[int, int]

    @property
    def value(self) -> float:
        return math.exp(self.value_log)


@dataclass(frozen=True)
class VelocityReport:
    v: float
    sbar_mean: float
    ballistic: bool
    sbar_stderr: float = 0.0
    v_stderr: float = 0.0


@dataclass(frozen=True)
class MomentInputs:
    """Law moments feeding the mean crossing-time formula.

    BiRC: up = E[c_0], down = E[1/c_0]; bias_factor is ignored (the tilt
    ratio exp(-2 delta) is deterministic).
    R1M: up = E[exp((1-lam) Z)], down = E[exp(-(1+lam) Z)], bias_factor =
    E[exp(-2 lam Z)].
    Use math.inf for divergent moments.  Stderr fields carry Monte Carlo
    uncertainty into the report; they are zero for closed-form inputs.
    """

    up: float
    down: float
    bias_factor: float | None = None
    up_stderr: float = 0.0
    down_stderr: float = 0.0

    @classmethod
    def analytic(cls, params: ModelParams) -> "MomentInputs":
        if isinstance(params, BircParams):
            t = params.tails
            w = t.weight_inf
            # heavy branch is Pareto(alpha_inf) on [1, inf); light branch is
            # its reciprocal on (0, 1]
            heavy_mean = t.alpha_inf / (t.alpha_inf - 1.0) if t.alpha_inf > 1.0 else math.inf
            light_mean = t.alpha_zero / (t.alpha_zero + 1.0)
            heavy_inv = t.alpha_inf / (t.alpha_inf + 1.0)
            light_inv = t.alpha_zero / (t.alpha_zero - 1.0) if t.alpha_zero > 1.0 else math.inf
            if t.is_point_mass:
                return cls(up=1.0, down=1.0)
            mean_c = _mix(w, heavy_mean, light_mean)
            mean_inv = _mix(w, heavy_inv, light_inv)
            return cls(up=mean_c, down=mean_inv)
        nu = params.nu
        lam = params.lam
        up = nu / (nu - (1.0 - lam)) if 1.0 - lam < nu else math.inf
        down = nu / (nu + 1.0 + lam)
        bias = nu / (nu + 2.0 * lam)
        return cls(up=up, down=down, bias_factor=bias)

    @classmethod
    def from_conductance_samples(cls, c: np.ndarray) -> "MomentInputs":
        """BiRC moments estimated from conductance draws."""
        c = np.asarray(c, dtype=np.float64)
        if c.size < 2 or not np.all(c > 0.0):
            raise PreconditionError("need >= 2 positive conductance samples")
        inv = 1.0 / c
        rt = math.sqrt(c.size)
        return cls(
            up=float(c.mean()),
            down=float(inv.mean()),
            up_stderr=float(c.std(ddof=1)) / rt,
            down_stderr=float(inv.std(ddof=1)) / rt,
        )

    @classmethod
    def from_spacing_samples(cls, z: np.ndarray, lam: float) -> "MomentInputs":
        """R1M exponential moments estimated from spacing draws."""
        z = np.asarray(z, dtype=np.float64)
        if z.size < 2 or not np.all(z > 0.0):
            raise PreconditionError("need >= 2 positive spacing samples")
        up_s = np.exp((1.0 - lam) * z)
        down_s = np.exp(-(1.0 + lam) * z)
        rt = math.sqrt(z.size)
        return cls(
            up=float(up_s.mean()),
            down=float(down_s.mean()),
            bias_factor=float(np.exp(-2.0 * lam * z).mean()),
            up_stderr=float(up_s.std(ddof=1)) / rt,
            down_stderr=float(down_s.std(ddof=1)) / rt,
        )


def _mix(w: float, heavy: float, light: float) -> float:
    """Mixture moment that avoids 0 * inf when a branch has weight zero."""
    out = 0.0
    if w > 0.0:
        out += w * heavy
    if w < 1.0:
        out += (1.0 - w) * light
    return out


@dataclass(frozen=True)
class ExponentPrediction:
    alpha: float
    regime: str
    raw_alpha: float
    scaling_law_applies: bool  # the scaling law is asserted only for raw_alpha <= 1


@dataclass(frozen=True)
class ReturnProbability:
    value: float
    crude_bound: float
    value_log: float
    crude_bound_log: float
    scanned_sites: int


@dataclass(frozen=True)
class TrapCensus:
    sites: np.ndarray
    threshold_log: float
    n: int

    @property
    def count(self) -> int:
        return int(self.sites.size)


# -- series resistances ---------------------------------------------------------


def harmonic_sum(env: Environment, i: int, j: int) -> HarmonicSum:
    """S(i, j): resistances of edges i..j in series, as a log-sum-exp."""
    if i > j:
        raise PreconditionError(f"harmonic_sum needs i <= j, got ({i}, {j})")
    logs = -env.log_biased_conductance(np.arange(i, j + 1, dtype=np.int64))
    return HarmonicSum(float(logsumexp(logs)), (i, j))


def effective_conductance(env: Environment, a: int, b: int) -> float:
    """log of the effective conductance between sites a and b (series law)."""
    if a >= b:
        raise PreconditionError(f"effective_conductance needs a < b, got ({a}, {b})")
    return -harmonic_sum(env, a, b - 1).value_log


def ruin_probability(env: Environment, k: int, left: int, right: int) -> float:
    """Chance of reaching `left` before `right` when started at k."""
    if not (left <= k <= right) or left >= right:
        raise PreconditionError(
            f"ruin_probability needs left <= k <= right and left < right, "
            f"got k={k}, left={left}, right={right}"
        )
    if k == left:
        return 1.0
    if k == right:
        return 0.0
    # conductance race: C(k<->left) against C(k<->right)
    s_left = harmonic_sum(env, left, k - 1).value_log
    s_right = harmonic_sum(env, k, right - 1).value_log
    return float(expit(s_right - s_left))


def return_probability(
    env: Environment, frm: int, target: int, tail_tol: float = 1e-10
) -> ReturnProbability:
    """Chance of ever visiting `target` when started at `frm` > target.

    The escape route to +infinity enters through S(frm, inf), truncated with
    a certified relative remainder below tail_tol.  Also reports the simple
    upper bound c*_target * S(frm, inf).
    """
    if target >= frm:
        raise PreconditionError(f"return_probability needs target < frm, got ({frm}, {target})")
    if not (tail_tol > 0.0):
        raise PreconditionError("tail_tol must be positive")
    s_mid = harmonic_sum(env, target, frm - 1).value_log
    s_inf, scanned = _scan_right_resistance(env, frm, tail_tol)
    value_log = float(-np.logaddexp(0.0, s_mid - s_inf))  # log expit(s_inf - s_mid)
    bound_log = env.log_biased_conductance(target) + s_inf
    return ReturnProbability(
        value=math.exp(value_log),
        crude_bound=math.exp(bound_log) if bound_log < 709.0 else math.inf,
        value_log=value_log,
        crude_bound_log=float(bound_log),
        scanned_sites=scanned,
    )


# -- expected hitting times ------------------------------------------------------


def log_expected_hitting_time(env: Environment, n: int, left_tol: float = 1e-10) -> float:
    """log of the quenched expectation of T_n, the first visit to site n.

    E[T_n] = sum_{k<=0} pi(k) S(0, n-1) + sum_{0<k<n} pi(k) S(k, n-1) with
    pi(k) = c*_{k-1} + c*_k; the k <= 0 mass telescopes to
    c*_0 + 2 sum_{j<=-1} c*_j, whose tail is truncated with a certified
    relative remainder.  Certifying the mass to left_tol certifies the total
    to left_tol as well, because the left block enters the total linearly
    with the positive factor S(0, n-1).
    """
    if n < 1:
        raise PreconditionError("n must be >= 1")
    if not (left_tol > 0.0):
        raise PreconditionError("left_tol must be positive")
    lt = env.log_biased_conductance(np.arange(0, n, dtype=np.int64))
    # suffix resistances: suff[k] = log S(k, n-1)
    suff = np.logaddexp.accumulate((-lt)[::-1])[::-1]
    left_mass, _ = _scan_left_mass(env, left_tol)
    log_pi_left = np.logaddexp(lt[0], math.log(2.0) + left_mass)
    total = log_pi_left + suff[0]
    if n > 1:
        log_pi = np.logaddexp(lt[:-1], lt[1:])  # pi(k) for k = 1..n-1
        total = np.logaddexp(total, logsumexp(log_pi + suff[1:]))
    return float(total)


def expected_hitting_time(env: Environment, n: int, left_tol: float = 1e-10) -> float:
    """Quenched expectation of T_n; see log_expected_hitting_time."""
    return math.exp(log_expected_hitting_time(env, n, left_tol))


def expected_hitting_time_oracle(env: Environment, n: int, left_cut: int) -> float:
    """First-step-analysis oracle: mean time to reach n for the chain
    reflected at left_cut (forced step right), solved as a tridiagonal
    linear system.  Converges to expected_hitting_time as left_cut -> -inf.
    """
    if n < 1:
        raise PreconditionError("n must be >= 1")
    if left_cut > -1:
        raise PreconditionError("left_cut must be <= -1")
    m = n - left_cut  # unknowns h(left_cut) .. h(n-1), with h(n) = 0
    omega = np.asarray(env.transition_prob(np.arange(left_cut + 1, n, dtype=np.int64)))
    ab = np.zeros((3, m))
    ab[1, 0] = 1.0   # reflecting row: h(left_cut) - h(left_cut + 1) = 1
    ab[0, 1] = -1.0
    ab[1, 1:] = 1.0  # interior rows: -(1-w) h(k-1) + h(k) - w h(k+1) = 1
    if m > 2:
        ab[0, 2:] = -omega[:-1]
    ab[2, : m - 1] = -(1.0 - omega)
    h = solve_banded((1, 1), ab, np.ones(m))
    return float(h[-left_cut])


def oracle_left_cut(
    env: Environment, n: int, cert_tol: float = 1e-10, start: int = -8
) -> tuple[int, float]:
    """Deepen the oracle's reflection point until its truncation error is
    certifiably below cert_tol relative.

    The reflected chain differs from the full expectation by exactly
    2 * S(0, n-1) * sum_{j < left_cut} c*_j, so a certified upper bound on
    that left-over mass yields a certificate.  Returns (left_cut, certificate).
    """
    log_e = log_expected_hitting_time(env, n, left_tol=min(cert_tol, 1e-8))
    s0 = harmonic_sum(env, 0, n - 1).value_log
    left_cut = start
    while True:
        mass, rem = _scan_left_mass(env, rel_tol=0.5, start=left_cut - 1)
        gap_log = math.log(2.0) + float(np.logaddexp(mass, rem)) + s0
        cert = math.exp(gap_log - log_e)
        if cert <= cert_tol:
            return left_cut, cert
        if -left_cut >= SCAN_CAP:
            raise CertificationError(
                f"oracle truncation not certifiable within {SCAN_CAP} sites"
            )
        left_cut *= 2


# -- certified one-sided tail scans ---------------------------------------------


def _scan_left_mass(
    env: Environment, rel_tol: float, start: int = -1, min_depth: int = 64
) -> tuple[float, float]:
    """log of sum_{j <= start} c*_j with certified relative remainder.

    Returns (log_mass, log_remainder_bound).  BiRC decay: c*_j carries
    exp(2 delta j), with a high-water mark over observed log c_j.  R1M decay:
    c*_j <= exp(2 lam x_{j+1}) and points drop at least z_eff per site to the
    left, z_eff = (smallest observed spacing) / 10.
    """
    params = env.params
    birc = isinstance(params, BircParams)
    acc = -math.inf
    hwm = -math.inf
    z_min = math.inf
    frontier = start + 1  # sites [frontier, start] scanned so far
    block = 64
    log_tol = math.log(rel_tol)
    while True:
        sites = np.arange(frontier - block, frontier, dtype=np.int64)
        lt = env.log_biased_conductance(sites)
        acc = float(np.logaddexp(acc, logsumexp(lt)))
        frontier -= block
        if birc:
            if params.delta > 0.0:
                two_d = 2.0 * params.delta
                hwm = max(hwm, float((lt - two_d * sites).max()))
                rem = (_LOG_SAFETY + hwm + two_d * (frontier - 1)
                       - math.log1p(-math.exp(-two_d)))
            else:
                rem = math.inf  # no tilt, the series diverges
        else:
            if params.lam > 0.0:
                z_min = min(z_min, float(env.spacings(sites).min()))
                z_eff = z_min / 10.0
                rem = (2.0 * params.lam * env.points(frontier)
                       - math.log1p(-math.exp(-2.0 * params.lam * z_eff)))
            else:
                rem = math.inf
        scanned = start + 1 - frontier
        if scanned >= min_depth and rem <= acc + log_tol:
            return acc, rem
        if scanned >= SCAN_CAP:
            raise CertificationError(
                f"left conductance mass not certifiable to {rel_tol:g} "
                f"within {SCAN_CAP} sites"
            )
        block = min(block * 2, 65536)


def _scan_right_resistance(
    env: Environment, start: int, rel_tol: float, min_depth: int = 64
) -> tuple[float, int]:
    """log of S(start, inf) = sum_{l >= start} 1/c*_l with certified
    relative remainder below rel_tol.  Returns (log_sum, sites_scanned)."""
    params = env.params
    birc = isinstance(params, BircParams)
    acc = -math.inf
    hwm = -math.inf
    z_min = math.inf
    frontier = start
    block = 64
    log_tol = math.log(rel_tol)
    while True:
        sites = np.arange(frontier, frontier + block, dtype=np.int64)
        lt = env.log_biased_conductance(sites)
        acc = float(np.logaddexp(acc, logsumexp(-lt)))
        frontier += block
        if birc:
            if params.delta > 0.0:
                two_d = 2.0 * params.delta
                hwm = max(hwm, float((two_d * sites - lt).max()))  # -log c_l
                rem = (_LOG_SAFETY + hwm - two_d * frontier
                       - math.log1p(-math.exp(-two_d)))
            else:
                rem = math.inf
        else:
            if params.lam > 0.0:
                z = env.spacings(sites)
                z_min = min(z_min, float(z.min()))
                hwm = max(hwm, float(z.max()))
                z_eff = z_min / 10.0
                rem = (_LOG_SAFETY + hwm - 2.0 * params.lam * env.points(frontier)
                       - math.log1p(-math.exp(-2.0 * params.lam * z_eff)))
            else:
                rem = math.inf
        scanned = frontier - start
        if scanned >= min_depth and rem <= acc + log_tol:
            return acc, scanned
        if scanned >= SCAN_CAP:
            raise CertificationError(
                f"resistance to +inf not certifiable to {rel_tol:g} "
                f"within {SCAN_CAP} sites"
            )
        block = min(block * 2, 65536)


# -- annealed quantities ----------------------------------------------------------


def annealed_velocity(params: ModelParams, moments: MomentInputs | None = None) -> VelocityReport:
    """Law-of-large-numbers velocity 1 / E[mean crossing time].

    E[Sbar] = 1 + 2 * up * down * g, where g resums the geometric tilt:
    g = q / (1 - q) with q = exp(-2 delta) for BiRC, and g = 1 / (1 - q)
    with q = E[exp(-2 lam Z)] for R1M.  Infinite moments (or zero tilt)
    give v = 0.
    """
    m = moments if moments is not None else MomentInputs.analytic(params)
    if isinstance(params, BircParams):
        if params.delta <= 0.0:
            g = math.inf
        else:
            q = math.exp(-2.0 * params.delta)
            g = q / (1.0 - q)
    else:
        q = m.bias_factor
        if q is None:
            q = params.nu / (params.nu + 2.0 * params.lam) if params.lam > 0.0 else 1.0
        g = 1.0 / (1.0 - q) if q < 1.0 else math.inf
    if not (math.isfinite(m.up) and math.isfinite(m.down) and math.isfinite(g)):
        return VelocityReport(v=0.0, sbar_mean=math.inf, ballistic=False)
    sbar = 1.0 + 2.0 * m.up * m.down * g
    sbar_err = 2.0 * g * math.hypot(m.up_stderr * m.down, m.up * m.down_stderr)
    return VelocityReport(
        v=1.0 / sbar,
        sbar_mean=sbar,
        ballistic=True,
        sbar_stderr=sbar_err,
        v_stderr=sbar_err / sbar ** 2,
    )


def predicted_exponent(params: ModelParams) -> ExponentPrediction:
    """Scaling exponent of log X_t / log t (equivalently n / log T_n)."""
    if isinstance(params, BircParams):
        if params.delta <= 0.0:
            raise PreconditionError("exponent prediction requires delta > 0")
        raw = params.tails.alpha_min
    else:
        if params.lam <= 0.0:
            raise PreconditionError("exponent prediction requires lam > 0")
        raw = (1.0 - params.lambda_c) / (1.0 - params.lam)
    if raw > 1.0:
        return ExponentPrediction(1.0, BALLISTIC, raw, False)
    return ExponentPrediction(raw, SUB_BALLISTIC, raw, True)


def trap_census(env: Environment, n: int, eps: float, alpha: float) -> TrapCensus:
    """Sites k in [1, n] whose jump ratio rho_k exceeds n^(1/alpha - eps)."""
    if n < 1:
        raise PreconditionError("n must be >= 1")
    if not (alpha > 0.0) or not math.isfinite(alpha):
        raise PreconditionError("alpha must be positive and finite")
    if not (0.0 < eps < 1.0 / alpha):
        raise PreconditionError("eps must lie in (0, 1/alpha)")
    thr = (1.0 / alpha - eps) * math.log(n)
    ks = np.arange(1, n + 1, dtype=np.int64)
    lr = np.asarray(env.log_rho(ks))
    return TrapCensus(sites=ks[lr > thr], threshold_log=thr, n=n)
