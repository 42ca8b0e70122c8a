"""Conductance landscapes for two families of one-dimensional walks.

Two models share one interface:

* BiRC — i.i.d. positive conductances c_k attached to edges (k, k+1),
  tilted by a bias delta: the walk sees c_k * exp(2*delta*k).  The law of
  c_0 has polynomial tails at infinity (index alpha_inf) and/or at zero
  (index alpha_zero), sampled as a two-branch Pareto mixture.
* R1M — a nearest-neighbour Mott-type walk on ordered points x_k with
  i.i.d. exponential spacings Z_k and field intensity lam: the edge
  (k, k+1) carries conductance exp(-Z_k + lam*(x_k + x_{k+1})).

Site quantities are produced lazily from a counter-based generator keyed by
(seed, stream, site), so windows extend in either direction with regenerated
values bit-identical to a larger initial window.  Extension is thread-safe:
readers snapshot an immutable window object, writers swap it under a lock.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import expit

from . import _rng
from .errors import CertificationError, PreconditionError, WindowCapError

WINDOW_CAP = 10_000_000  # hard limit on materialized window span, in sites

# stream tags for per-site quantities
_S_BRANCH = 1
_S_VALUE = 2
_S_SPACING = 3
# stream tag for per-environment seeds in multi-environment samplers
_S_ENV = 17

# transition probabilities are clamped into the open interval (0, 1):
# the logistic saturates to exactly 1.0 in float64 once the log-ratio
# exceeds ~36.7, and downstream code divides by both omega and 1 - omega.
_OMEGA_MIN = 5e-324
_OMEGA_MAX = 1.0 - 2.0 ** -53

_LOG_SAFETY = math.log(10.0)  # high-water-mark safety factor for tail bounds


@dataclass(frozen=True)
class TailSpec:
    """Tail behaviour of the conductance law at infinity and at zero.

    P(c > t) ~ t^(-alpha_inf) for large t and P(c < 1/t) ~ t^(-alpha_zero);
    either index may be math.inf, meaning that side has no polynomial tail.
    weight_inf is the probability of drawing from the heavy-at-infinity
    branch; it may be omitted whenever one side is trivial (inf index).
    Both indices infinite degenerates to the point mass c == 1.
    """

    alpha_inf: float
    alpha_zero: float
    weight_inf: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "alpha_inf", float(self.alpha_inf))
        object.__setattr__(self, "alpha_zero", float(self.alpha_zero))
        if self.weight_inf is not None:
            object.__setattr__(self, "weight_inf", float(self.weight_inf))
        ai, a0 = self.alpha_inf, self.alpha_zero
        if not (ai > 0.0) or not (a0 > 0.0):
            raise PreconditionError("tail indices must be positive (math.inf allowed)")
        w = self.weight_inf
        both_finite = math.isfinite(ai) and math.isfinite(a0)
        if both_finite:
            if w is None:
                raise PreconditionError(
                    "weight_inf is required when both tail indices are finite"
                )
            if not 0.0 <= w <= 1.0:
                raise PreconditionError("weight_inf must lie in [0, 1]")
        elif math.isinf(ai) and math.isinf(a0):
            object.__setattr__(self, "weight_inf", 0.0)  # point mass; weight moot
        elif math.isinf(ai):
            if w not in (None, 0.0):
                raise PreconditionError("alpha_inf = inf forces weight_inf = 0")
            object.__setattr__(self, "weight_inf", 0.0)
        else:
            if w not in (None, 1.0):
                raise PreconditionError("alpha_zero = inf forces weight_inf = 1")
            object.__setattr__(self, "weight_inf", 1.0)

    @property
    def alpha_min(self) -> float:
        return min(self.alpha_inf, self.alpha_zero)

    @property
    def is_point_mass(self) -> bool:
        return math.isinf(self.alpha_inf) and math.isinf(self.alpha_zero)

    @classmethod
    def point_mass(cls) -> "TailSpec":
        """The degenerate law c == 1."""
        return cls(alpha_inf=math.inf, alpha_zero=math.inf)


@dataclass(frozen=True)
class BircParams:
    """Biased random conductance model: bias delta >= 0 and conductance tails.

    delta = 0 is the unbiased (recurrent) chain; it is accepted here because
    environment-level operations are well defined, but exponent predictions
    require delta > 0.
    """

    delta: float
    tails: TailSpec

    def __post_init__(self):
        object.__setattr__(self, "delta", float(self.delta))
        if not (self.delta >= 0.0) or not math.isfinite(self.delta):
            raise PreconditionError("delta must be finite and >= 0")

    @property
    def model(self) -> str:
        return "birc"


@dataclass(frozen=True)
class R1mParams:
    """Range-one Mott walk: field intensity lam in [0, 1), critical value
    lambda_c in (0, 1).  Spacings are Exp(1 - lambda_c)."""

    lam: float
    lambda_c: float

    def __post_init__(self):
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "lambda_c", float(self.lambda_c))
        if not (0.0 <= self.lam < 1.0):
            raise PreconditionError("lam must lie in [0, 1)")
        if not (0.0 < self.lambda_c < 1.0):
            raise PreconditionError("lambda_c must lie in (0, 1)")

    @property
    def nu(self) -> float:
        """Rate of the exponential spacing law."""
        return 1.0 - self.lambda_c

    @property
    def model(self) -> str:
        return "r1m"


ModelParams = BircParams | R1mParams


class _Window(NamedTuple):
    lo: int
    hi: int
    log_c: np.ndarray          # sites lo..hi: log c_k (BiRC) or -Z_k (R1M)
    z: np.ndarray | None       # R1M spacings, sites lo..hi
    x: np.ndarray | None       # R1M points, sites lo..hi+1


def _birc_log_c(key_branch, key_value, tails: TailSpec, sites) -> np.ndarray:
    """log c at the given sites; keys may be arrays broadcasting with sites."""
    if tails.is_point_mass:
        shape = np.broadcast_shapes(np.shape(key_branch), np.shape(sites))
        return np.zeros(shape)
    u_branch = _rng.uniform(key_branch, sites)
    u_value = _rng.uniform(key_value, sites)
    heavy = u_branch < tails.weight_inf
    lg = np.log(u_value)
    # heavy branch: Pareto(alpha_inf) on [1, inf); light: reciprocal on (0, 1]
    out = np.where(heavy, -lg / tails.alpha_inf, lg / tails.alpha_zero)
    return out + 0.0  # fold -0.0 into +0.0


def _r1m_spacings(key_spacing, nu: float, sites) -> np.ndarray:
    return -np.log(_rng.uniform(key_spacing, sites)) / nu


class Environment:
    """A realized landscape on an integer window [k_min, k_max], k_min <= 0 < k_max.

    All public accessors take a site index or an integer array of sites and
    extend the window on demand (unless the environment is frozen).
    """

    def __init__(self, params: ModelParams, window: tuple[int, int], seed: int):
        self.params = params
        self.seed = int(seed)
        k_min, k_max = int(window[0]), int(window[1])
        _check_window(k_min, k_max)
        self._extendable = True
        self._lock = threading.Lock()
        if isinstance(params, BircParams):
            self._key_branch = _rng.derive_key(self.seed, _S_BRANCH)
            self._key_value = _rng.derive_key(self.seed, _S_VALUE)
        else:
            self._key_spacing = _rng.derive_key(self.seed, _S_SPACING)
        self._window_data = self._build(k_min, k_max)

    @classmethod
    def from_values(
        cls,
        params: ModelParams,
        k_min: int,
        *,
        log_c: np.ndarray | None = None,
        spacings: np.ndarray | None = None,
        points: np.ndarray | None = None,
        seed: int = -1,
    ) -> "Environment":
        """Build a frozen environment from explicit per-site data.

        BiRC takes log_c over sites k_min..k_max.  R1M takes spacings over
        the same range plus optionally the points x over k_min..k_max+1
        (rebuilt from the spacings, anchored at x_0 = 0, when omitted).
        """
        env = object.__new__(cls)
        env.params = params
        env.seed = int(seed)
        env._extendable = False
        env._lock = threading.Lock()
        if isinstance(params, BircParams):
            if log_c is None:
                raise PreconditionError("BiRC from_values requires log_c")
            log_c = np.asarray(log_c, dtype=np.float64)
            k_max = k_min + log_c.size - 1
            _check_window(k_min, k_max)
            env._window_data = _Window(k_min, k_max, log_c, None, None)
        else:
            if spacings is None:
                raise PreconditionError("R1M from_values requires spacings")
            z = np.asarray(spacings, dtype=np.float64)
            if not np.all(z > 0.0):
                raise PreconditionError("spacings must be positive")
            k_max = k_min + z.size - 1
            _check_window(k_min, k_max)
            if points is None:
                x = _points_from_spacings(z, k_min)
            else:
                x = np.asarray(points, dtype=np.float64)
                if x.size != z.size + 1:
                    raise PreconditionError("points must cover k_min..k_max+1")
            env._window_data = _Window(k_min, k_max, -z, z, x)
        return env

    # -- window plumbing ---------------------------------------------------

    @property
    def window(self) -> tuple[int, int]:
        w = self._window_data
        return (w.lo, w.hi)

    @property
    def extendable(self) -> bool:
        return self._extendable

    def freeze(self) -> None:
        """Disable further window extension."""
        self._extendable = False

    def _build(self, lo: int, hi: int) -> _Window:
        sites = np.arange(lo, hi + 1, dtype=np.int64)
        if isinstance(self.params, BircParams):
            log_c = _birc_log_c(self._key_branch, self._key_value, self.params.tails, sites)
            return _Window(lo, hi, log_c, None, None)
        z = _r1m_spacings(self._key_spacing, self.params.nu, sites)
        return _Window(lo, hi, -z, z, _points_from_spacings(z, lo))

    def _ensure(self, lo: int, hi: int) -> _Window:
        w = self._window_data
        if lo >= w.lo and hi <= w.hi:
            return w
        if not self._extendable:
            raise PreconditionError(
                f"sites [{lo}, {hi}] outside frozen window [{w.lo}, {w.hi}]"
            )
        with self._lock:
            w = self._window_data
            if lo >= w.lo and hi <= w.hi:
                return w
            span = w.hi - w.lo + 1
            new_lo = min(lo, w.lo - span) if lo < w.lo else w.lo
            new_hi = max(hi, w.hi + span) if hi > w.hi else w.hi
            if new_hi - new_lo + 1 > WINDOW_CAP:
                new_lo, new_hi = min(lo, w.lo), max(hi, w.hi)  # drop the padding
                if new_hi - new_lo + 1 > WINDOW_CAP:
                    raise WindowCapError(
                        f"window [{new_lo}, {new_hi}] exceeds cap of {WINDOW_CAP} sites"
                    )
            self._window_data = self._extend(w, new_lo, new_hi)
            return self._window_data

    def _extend(self, w: _Window, lo: int, hi: int) -> _Window:
        if isinstance(self.params, BircParams):
            parts = []
            if lo < w.lo:
                parts.append(_birc_log_c(self._key_branch, self._key_value,
                                         self.params.tails,
                                         np.arange(lo, w.lo, dtype=np.int64)))
            parts.append(w.log_c)
            if hi > w.hi:
                parts.append(_birc_log_c(self._key_branch, self._key_value,
                                         self.params.tails,
                                         np.arange(w.hi + 1, hi + 1, dtype=np.int64)))
            return _Window(lo, hi, np.concatenate(parts), None, None)

        z_parts, x_left, x_right = [w.z], None, None
        if lo < w.lo:
            z_new = _r1m_spacings(self._key_spacing, self.params.nu,
                                  np.arange(lo, w.lo, dtype=np.int64))
            z_parts.insert(0, z_new)
            # continue the canonical leftward fold: partial sums restart from
            # -x[w.lo] so the float rounding sequence matches a fresh build
            s = np.cumsum(np.concatenate(([-w.x[0]], z_new[::-1])))[1:]
            x_left = -s[::-1]
        if hi > w.hi:
            z_new = _r1m_spacings(self._key_spacing, self.params.nu,
                                  np.arange(w.hi + 1, hi + 1, dtype=np.int64))
            z_parts.append(z_new)
            x_right = np.cumsum(np.concatenate(([w.x[-1]], z_new)))[1:]
        z = np.concatenate(z_parts)
        x_parts = [p for p in (x_left, w.x, x_right) if p is not None]
        x = np.concatenate(x_parts)
        return _Window(lo, hi, -z, z, x)

    def _sites_window(self, k) -> tuple[np.ndarray, _Window]:
        ks = np.atleast_1d(np.asarray(k, dtype=np.int64))
        if ks.size == 0:
            raise PreconditionError("empty site array")
        w = self._ensure(int(ks.min()), int(ks.max()))
        return ks, w

    # -- per-site quantities -------------------------------------------------

    def log_conductance(self, k):
        """Untilted log conductance of edge (k, k+1): log c_k, or -Z_k for R1M."""
        ks, w = self._sites_window(k)
        out = w.log_c[ks - w.lo]
        return out if np.ndim(k) else float(out[0])

    def spacings(self, k):
        """R1M spacing Z_k of edge (k, k+1)."""
        self._require_r1m()
        ks, w = self._sites_window(k)
        out = w.z[ks - w.lo]
        return out if np.ndim(k) else float(out[0])

    def points(self, k):
        """R1M point position x_k (x_0 = 0)."""
        self._require_r1m()
        ks = np.atleast_1d(np.asarray(k, dtype=np.int64))
        # x is stored one past the window on the right
        w = self._ensure(min(int(ks.min()), 0), max(int(ks.max()) - 1, 0))
        out = w.x[ks - w.lo]
        return out if np.ndim(k) else float(out[0])

    def log_biased_conductance(self, k):
        """log of the tilted conductance the walk actually sees on edge (k, k+1)."""
        ks, w = self._sites_window(k)
        i = ks - w.lo
        if isinstance(self.params, BircParams):
            out = 2.0 * self.params.delta * ks + w.log_c[i]
        else:
            out = -w.z[i] + self.params.lam * (w.x[i] + w.x[i + 1])
        return out if np.ndim(k) else float(out[0])

    def log_rho(self, k):
        """log of rho_k = (1 - omega_k) / omega_k, computed exactly as
        log c*_{k-1} - log c*_k (never through the clamped omega)."""
        ks = np.atleast_1d(np.asarray(k, dtype=np.int64))
        lt = self.log_biased_conductance(np.stack([ks - 1, ks]))
        out = lt[0] - lt[1]
        return out if np.ndim(k) else float(out[0])

    def transition_prob(self, k):
        """Probability omega_k of stepping k -> k+1, clamped into (0, 1)."""
        lr = self.log_rho(k)
        return np.clip(expit(-np.asarray(lr)), _OMEGA_MIN, _OMEGA_MAX) if np.ndim(k) \
            else float(min(max(expit(-lr), _OMEGA_MIN), _OMEGA_MAX))

    def potential(self, k):
        """Potential V(k) = sum of log rho over (0, k], with V(0) = 0 and
        V(k) = -sum over (k, 0] for k < 0."""
        ks = np.atleast_1d(np.asarray(k, dtype=np.int64))
        lo = min(int(ks.min()), 0)
        hi = max(int(ks.max()), 0)
        if hi > lo:
            steps = self.log_rho(np.arange(lo + 1, hi + 1, dtype=np.int64))
        else:
            steps = np.empty(0)
        v = np.concatenate(([0.0], np.cumsum(steps)))  # V at sites lo..hi, up to V(lo)
        v -= v[-lo]  # anchor V(0) = 0
        out = v[ks - lo]
        return out if np.ndim(k) else float(out[0])

    def _require_r1m(self):
        if not isinstance(self.params, R1mParams):
            raise PreconditionError("operation requires an R1M environment")


def _check_window(k_min: int, k_max: int) -> None:
    if not (k_min <= 0 < k_max):
        raise PreconditionError(
            f"window [{k_min}, {k_max}] must satisfy k_min <= 0 < k_max"
        )
    if k_max - k_min + 1 > WINDOW_CAP:
        raise WindowCapError(f"requested window exceeds cap of {WINDOW_CAP} sites")


def _points_from_spacings(z: np.ndarray, lo: int) -> np.ndarray:
    """Points x over sites lo..lo+len(z), anchored x_0 = 0, folded outward
    from the origin so extension can reproduce the identical rounding."""
    idx0 = -lo
    x = np.empty(z.size + 1)
    x[idx0] = 0.0
    x[idx0 + 1:] = np.cumsum(z[idx0:])
    if idx0 > 0:
        x[:idx0] = -np.cumsum(z[:idx0][::-1])[::-1]
    return x


def sample_environment(params: ModelParams, window: tuple[int, int], seed: int) -> Environment:
    """Draw a fresh environment with the given window materialized."""
    return Environment(params, window, seed)


def environment_seed(master_seed: int, index) -> np.uint64:
    """Seed for the index-th environment of a multi-environment run.

    index may be an integer array, giving an array of seeds.
    """
    idx = index.astype(np.int64) if isinstance(index, np.ndarray) else int(index)
    return _rng.derive_key(master_seed, _S_ENV, idx)


# -- vectorized multi-environment samplers -----------------------------------
#
# These draw per-environment functionals across many independent landscapes
# without building Environment objects: the same keyed generator, with the
# environment index folded into the key exactly as environment_seed does, so
# draw e reproduces Environment(params, ..., seed=environment_seed(seed, e)).


def sample_log_rho0(params: ModelParams, count: int, master_seed: int) -> np.ndarray:
    """log rho_0 across `count` independent environments."""
    if count < 1:
        raise PreconditionError("count must be >= 1")
    seeds = environment_seed(master_seed, np.arange(count, dtype=np.int64))
    if isinstance(params, BircParams):
        kb = _rng.derive_key(seeds, _S_BRANCH)
        kv = _rng.derive_key(seeds, _S_VALUE)
        lc_prev = _birc_log_c(kb, kv, params.tails, -1)
        lc_here = _birc_log_c(kb, kv, params.tails, 0)
        return -2.0 * params.delta + lc_prev - lc_here
    ks = _rng.derive_key(seeds, _S_SPACING)
    z_prev = _r1m_spacings(ks, params.nu, -1)
    z_here = _r1m_spacings(ks, params.nu, 0)
    return -(1.0 + params.lam) * z_prev + (1.0 - params.lam) * z_here


def sample_side_sums(
    params: ModelParams,
    count: int,
    master_seed: int,
    side: str,
    rel_tol: float = 1e-10,
    max_sites: int = 10 ** 6,
) -> np.ndarray:
    """Per-environment value of one of the two series that control trapping:

    * side="left":  sum over k <= -1 of the tilted conductance c*_k;
    * side="right": sum over k >= 1 of 1 / c*_k.

    Each series is truncated with a certified relative remainder below
    rel_tol, using a per-environment high-water mark with a 10x safety
    factor on top of the deterministic decay of the tilt.  Environments
    whose remainder cannot be certified within max_sites raise.
    """
    if side not in ("left", "right"):
        raise PreconditionError("side must be 'left' or 'right'")
    if count < 1:
        raise PreconditionError("count must be >= 1")
    if not (rel_tol > 0.0):
        raise PreconditionError("rel_tol must be positive")
    seeds = environment_seed(master_seed, np.arange(count, dtype=np.int64))
    if isinstance(params, BircParams):
        return _birc_side_sums(params, seeds, side, rel_tol, max_sites)
    return _r1m_side_sums(params, seeds, side, rel_tol, max_sites)


_BLOCK_BUDGET = 1 << 23  # elements per vectorized block, keeps temporaries ~64 MB


def _block_size(want: int, active: int) -> int:
    return max(8, min(want, _BLOCK_BUDGET // active))


def _birc_side_sums(params, seeds, side, rel_tol, max_sites):
    if params.delta <= 0.0:
        raise CertificationError("side sums diverge without a positive bias")
    kb = _rng.derive_key(seeds, _S_BRANCH)
    kv = _rng.derive_key(seeds, _S_VALUE)
    two_delta = 2.0 * params.delta
    log_geom = math.log1p(-math.exp(-two_delta))
    n = seeds.size
    acc = np.zeros(n)
    hwm = np.full(n, -np.inf)
    active = np.arange(n)
    frontier = 0  # sites with |k| <= frontier already scanned
    want = 64
    log_tol = math.log(rel_tol)
    while active.size:
        block = _block_size(want, active.size)
        sites = np.arange(frontier + 1, frontier + block + 1, dtype=np.int64)
        if side == "left":
            sites = -sites
        lc = _birc_log_c(kb[active, None], kv[active, None], params.tails, sites[None, :])
        if side == "left":
            terms = np.exp(two_delta * sites[None, :] + lc)
            hwm[active] = np.maximum(hwm[active], lc.max(axis=1))
        else:
            terms = np.exp(-two_delta * sites[None, :] - lc)
            hwm[active] = np.maximum(hwm[active], (-lc).max(axis=1))
        acc[active] += terms.sum(axis=1)
        frontier += block
        want = min(want * 2, 65536)
        # remainder over |k| > frontier: hwm prefactor times a geometric tail
        rem_log = _LOG_SAFETY + hwm[active] - two_delta * (frontier + 1) - log_geom
        with np.errstate(divide="ignore"):
            done = rem_log <= np.log(acc[active]) + log_tol
        active = active[~done]
        if active.size and frontier >= max_sites:
            raise CertificationError(
                f"{active.size} environments uncertified after {frontier} sites"
            )
    return acc


def _r1m_side_sums(params, seeds, side, rel_tol, max_sites):
    if params.lam <= 0.0:
        raise CertificationError("side sums diverge without a positive field")
    ks = _rng.derive_key(seeds, _S_SPACING)
    lam, nu = params.lam, params.nu
    n = seeds.size
    acc = np.zeros(n)
    hwm_z = np.full(n, -np.inf)
    z_min = np.full(n, np.inf)
    x_f = np.zeros(n)  # x at the current frontier site (all environments)
    active = np.arange(n)
    frontier = 0
    want = 64
    log_tol = math.log(rel_tol)
    while active.size:
        block = _block_size(want, active.size)
        if side == "left":
            sites = -np.arange(frontier + 1, frontier + block + 1, dtype=np.int64)[::-1]
        else:
            sites = np.arange(frontier, frontier + block, dtype=np.int64)
        z = _r1m_spacings(ks[active, None], nu, sites[None, :])
        z_min[active] = np.minimum(z_min[active], z.min(axis=1))
        if side == "left":
            # x at sites[0]..sites[-1], folding leftward from x_f
            s = np.cumsum(np.concatenate((-x_f[active, None], z[:, ::-1]), axis=1), axis=1)[:, 1:]
            x_lo = -s[:, ::-1]
            x_hi = np.concatenate((x_lo[:, 1:], x_f[active, None]), axis=1)
            acc[active] += np.exp(-z + lam * (x_lo + x_hi)).sum(axis=1)
            x_f[active] = x_lo[:, 0]
            # c*_k <= exp(2 lam x_{k+1}) and future points drop by >= z_eff per site
            z_eff = z_min[active] / 10.0
            rem_log = 2.0 * lam * x_f[active] - np.log1p(-np.exp(-2.0 * lam * z_eff))
        else:
            hwm_z[active] = np.maximum(hwm_z[active], z.max(axis=1))
            x_hi = x_f[active, None] + np.cumsum(z, axis=1)
            x_lo = np.concatenate((x_f[active, None], x_hi[:, :-1]), axis=1)
            terms = np.exp(z - lam * (x_lo + x_hi))
            if frontier == 0:
                terms[:, 0] = 0.0  # series starts at k = 1
            acc[active] += terms.sum(axis=1)
            x_f[active] = x_hi[:, -1]
            z_eff = z_min[active] / 10.0
            rem_log = (_LOG_SAFETY + hwm_z[active] - 2.0 * lam * x_f[active]
                       - np.log1p(-np.exp(-2.0 * lam * z_eff)))
        frontier += block
        want = min(want * 2, 65536)
        with np.errstate(divide="ignore"):
            done = rem_log <= np.log(acc[active]) + log_tol
        active = active[~done]
        if active.size and frontier >= max_sites:
            raise CertificationError(
                f"{active.size} environments uncertified after {frontier} sites"
            )
    return acc


# -- persistence ---------------------------------------------------------------

_DUMP_VERSION = 1


def dump_environment(env: Environment, path: str) -> None:
    """Write the realized window as tabular text; floats round-trip exactly."""
    w = env._window_data
    lines = [f"# rwrc environment v{_DUMP_VERSION}"]
    p = env.params
    if isinstance(p, BircParams):
        lines.append("# model = birc")
        lines.append(f"# delta = {p.delta!r}")
        lines.append(f"# alpha_inf = {p.tails.alpha_inf!r}")
        lines.append(f"# alpha_zero = {p.tails.alpha_zero!r}")
        lines.append(f"# weight_inf = {p.tails.weight_inf!r}")
    else:
        lines.append("# model = r1m")
        lines.append(f"# lam = {p.lam!r}")
        lines.append(f"# lambda_c = {p.lambda_c!r}")
    lines.append(f"# seed = {env.seed}")
    lines.append(f"# k_min = {w.lo}")
    lines.append(f"# k_max = {w.hi}")
    if isinstance(p, BircParams):
        lines.append("# columns: k log_c")
        for k in range(w.lo, w.hi + 1):
            lines.append(f"{k} {float(w.log_c[k - w.lo])!r}")
    else:
        lines.append("# columns: k z x")
        for k in range(w.lo, w.hi + 1):
            lines.append(f"{k} {float(w.z[k - w.lo])!r} {float(w.x[k - w.lo])!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_environment(path: str) -> Environment:
    """Read an environment written by dump_environment.  The result is frozen:
    sites outside the stored window raise instead of being regenerated."""
    meta: dict[str, str] = {}
    rows: list[list[float]] = []
    with open(path) as fh:
        first = fh.readline().strip()
        if first != f"# rwrc environment v{_DUMP_VERSION}":
            raise PreconditionError(f"unrecognized environment file header: {first!r}")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    key, _, val = body.partition("=")
                    meta[key.strip()] = val.strip()
                continue
            rows.append([float(tok) for tok in line.split()])
    try:
        model = meta["model"]
        k_min = int(meta["k_min"])
        k_max = int(meta["k_max"])
        seed = int(meta["seed"])
        if model == "birc":
            params: ModelParams = BircParams(
                delta=float(meta["delta"]),
                tails=TailSpec(
                    alpha_inf=float(meta["alpha_inf"]),
                    alpha_zero=float(meta["alpha_zero"]),
                    weight_inf=float(meta["weight_inf"]),
                ),
            )
        elif model == "r1m":
            params = R1mParams(lam=float(meta["lam"]), lambda_c=float(meta["lambda_c"]))
        else:
            raise PreconditionError(f"unknown model {model!r}")
    except KeyError as exc:
        raise PreconditionError(f"environment file missing field {exc}") from exc
    if len(rows) != k_max - k_min + 1:
        raise PreconditionError(
            f"expected {k_max - k_min + 1} site rows, found {len(rows)}"
        )
    data = np.asarray(rows)
    if not np.array_equal(data[:, 0], np.arange(k_min, k_max + 1)):
        raise PreconditionError("site column must run contiguously k_min..k_max")
    if model == "birc":
        return Environment.from_values(params, k_min, log_c=data[:, 1], seed=seed)
    z = data[:, 1]
    x = np.concatenate((data[:, 2], [data[-1, 2] + z[-1]]))
    return Environment.from_values(params, k_min, spacings=z, points=x, seed=seed)
