"""Estimators that turn samples into power-law statements.

Tail indices are measured two ways: a least-squares fit of log empirical
survival against log threshold (robust, what the acceptance checks quote)
and a Hill estimator over the top order statistics (reported alongside as a
cross-check).  Scaling exponents come from ordinary least squares on log-log
grids with the usual residual-based slope uncertainty.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError


@dataclass(frozen=True)
class ExponentEstimate:
    slope: float
    stderr: float
    grid: np.ndarray
    intercept: float


@dataclass(frozen=True)
class TailIndexReport:
    estimate: ExponentEstimate   # slope estimates -alpha
    hill_alpha: float
    hill_k: int

    @property
    def alpha(self) -> float:
        return -self.estimate.slope


@dataclass(frozen=True)
class ProductTailReport:
    alpha_x: float
    alpha_y: float               # inf when Y's tail is too light to fit
    alpha_y_bound_ok: bool       # Y not heavier than X's nominal index
    alpha_xy: float


def _ols(x: np.ndarray, y: np.ndarray, weights: np.ndarray | None = None):
    w = np.ones_like(x) if weights is None else np.asarray(weights, dtype=np.float64)
    if np.any(w <= 0.0):
        raise PreconditionError("weights must be positive")
    wsum = w.sum()
    xb = (w * x).sum() / wsum
    yb = (w * y).sum() / wsum
    sxx = (w * (x - xb) ** 2).sum()
    if sxx <= 0.0:
        raise PreconditionError("regression needs at least two distinct abscissae")
    slope = (w * (x - xb) * (y - yb)).sum() / sxx
    intercept = yb - slope * xb
    resid = y - intercept - slope * x
    dof = x.size - 2
    s2 = (w * resid ** 2).sum() / dof if dof > 0 else 0.0
    return slope, intercept, math.sqrt(max(s2, 0.0) / sxx)


def default_thresholds(samples: np.ndarray, count: int = 12) -> np.ndarray:
    """Geometric threshold grid from the 0.9 quantile down to the level with
    about 100 exceedances — the window where survival estimates are stable."""
    s = np.asarray(samples, dtype=np.float64)
    lo = float(np.quantile(s, 0.9))
    hi = float(np.quantile(s, 1.0 - 100.0 / s.size)) if s.size > 1000 else float(np.quantile(s, 0.99))
    if not (0.0 < lo < hi):
        raise PreconditionError("samples have no usable threshold range")
    return np.geomspace(lo, hi, count)


def tail_exponent(
    samples: np.ndarray,
    thresholds: np.ndarray,
    hill_k: int | None = None,
) -> TailIndexReport:
    """Fit of log P(sample > t) against log t; the slope estimates -alpha.

    Thresholds with empty survival are dropped; fewer than 3 usable ones is
    an error.  The Hill estimator over the top k = floor(sqrt(N)) order
    statistics (overridable) is reported alongside.
    """
    s = np.asarray(samples, dtype=np.float64)
    if s.size < 1000:
        raise PreconditionError("need at least 10^3 samples")
    if not np.all(s > 0.0):
        raise PreconditionError("samples must be positive")
    thr = np.asarray(thresholds, dtype=np.float64)
    if thr.size == 0 or np.any(thr <= 0.0) or np.any(np.diff(thr) <= 0.0):
        raise PreconditionError("thresholds must be positive and increasing")
    srt = np.sort(s)
    exceed = s.size - np.searchsorted(srt, thr, side="right")
    usable = exceed > 0
    if usable.sum() < 3:
        raise PreconditionError("fewer than 3 thresholds have nonempty survival")
    x = np.log(thr[usable])
    y = np.log(exceed[usable] / s.size)
    slope, intercept, stderr = _ols(x, y)
    k = int(math.isqrt(s.size)) if hill_k is None else int(hill_k)
    k = max(1, min(k, s.size - 1))
    top = srt[s.size - k - 1:]
    gaps = np.log(top[1:] / top[0])
    mean_gap = float(gaps.mean())
    hill = 1.0 / mean_gap if mean_gap > 0.0 else math.inf
    return TailIndexReport(
        estimate=ExponentEstimate(slope, stderr, thr[usable].copy(), intercept),
        hill_alpha=hill,
        hill_k=k,
    )


def scaling_slope(points, weights=None) -> ExponentEstimate:
    """OLS of log value on log n over a grid of (n, value) pairs.

    Slope estimates 1/alpha when the values are hitting times (or their
    quenched means) and alpha when they are positions against time.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 3:
        raise PreconditionError("need at least 3 (n, value) points")
    ns, vals = pts[:, 0], pts[:, 1]
    if np.any(ns <= 0.0) or np.any(np.diff(ns) <= 0.0):
        raise PreconditionError("n grid must be positive and strictly increasing")
    if np.any(vals <= 0.0):
        raise PreconditionError("values must be positive")
    slope, intercept, stderr = _ols(np.log(ns), np.log(vals), weights)
    return ExponentEstimate(slope, stderr, ns.copy(), intercept)


# -- product-tail verification ------------------------------------------------


def constant_sampler(value: float):
    """Y == value; the degenerate lighter tail."""
    v = float(value)
    if v <= 0.0:
        raise PreconditionError("constant must be positive")

    def sample(rng: np.random.Generator, size: int) -> np.ndarray:
        return np.full(size, v)

    return sample


def pareto_sampler(alpha: float):
    """P(Y > t) = t^-alpha on [1, inf)."""
    a = float(alpha)
    if a <= 0.0:
        raise PreconditionError("alpha must be positive")

    def sample(rng: np.random.Generator, size: int) -> np.ndarray:
        return (1.0 - rng.random(size)) ** (-1.0 / a)

    return sample


def lognormal_sampler(sigma: float = 1.0, mu: float = 0.0):
    """Log-normal Y: lighter than any polynomial tail."""
    if sigma <= 0.0:
        raise PreconditionError("sigma must be positive")

    def sample(rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.lognormal(mu, sigma, size)

    return sample


def product_tail_check(
    alpha: float,
    lighter_tail_sampler,
    samples: int,
    seed: int,
    bound_margin: float = 0.1,
) -> ProductTailReport:
    """Draw X ~ Pareto(alpha) and Y from the lighter-tailed sampler and fit
    the tails of X, Y, and XY: multiplying by a lighter tail should not move
    the index, so alpha_xy is expected to land near alpha."""
    if alpha <= 0.0:
        raise PreconditionError("alpha must be positive")
    if samples < 10 ** 5:
        raise PreconditionError("need at least 10^5 samples")
    rng = np.random.default_rng(int(seed))
    x = (1.0 - rng.random(samples)) ** (-1.0 / alpha)
    y = np.asarray(lighter_tail_sampler(rng, samples), dtype=np.float64)
    if y.shape != (samples,) or not np.all(y > 0.0):
        raise PreconditionError("sampler must return `samples` positive values")
    alpha_x = tail_exponent(x, default_thresholds(x)).alpha
    try:
        alpha_y = tail_exponent(y, default_thresholds(y)).alpha
    except PreconditionError:
        alpha_y = math.inf  # no fit possible: tail lighter than the grid resolves
    xy = x * y
    alpha_xy = tail_exponent(xy, default_thresholds(xy)).alpha
    return ProductTailReport(
        alpha_x=alpha_x,
        alpha_y=alpha_y,
        alpha_y_bound_ok=alpha_y >= alpha - bound_margin,
        alpha_xy=alpha_xy,
    )
