"""
Linear memory and latency fits from a profile.

Memory is fitted over every successful batch. Latency is fitted only from
the utilization knee upward: below it the GPU is not saturated and step
time grows sub-linearly.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats

from .errors import FitError, KneeDetectionError, SingularFitError
from .profiles import CostModel, LatencyModel, LinearFit, MemoryModel, ProfileSeries

# Confidence level of the F-test that accepts a free two-segment split.
KNEE_CONFIDENCE = 0.999
# The flat-then-linear test has one extra parameter, so it can afford less.
HINGE_CONFIDENCE = 0.99
# Residuals below this fraction of |y| are treated as exact (float round-off).
EXACT_RTOL = 1e-9


@dataclass(frozen=True)
class FitConfig:
    sample_fraction: float = 0.2
    knee_r2_threshold: float = 0.99
    min_points: int = 4
    rng_seed: int = 0

    def __post_init__(self):
        if not 0 < self.sample_fraction <= 1:
            raise ValueError("sample_fraction must be in (0, 1]")
        if not 0 < self.knee_r2_threshold <= 1:
            raise ValueError("knee_r2_threshold must be in (0, 1]")
        if self.min_points < 2:
            raise ValueError("min_points must be >= 2")


def _as_arrays(points):
    arr = np.asarray(points, dtype=float).reshape(-1, 2)
    order = np.argsort(arr[:, 0], kind="stable")
    return arr[order, 0], arr[order, 1]


def ols(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Slope and intercept of the least squares line through (x, y)."""
    xm = x.mean()
    dx = x - xm
    sxx = float(dx @ dx)
    if sxx == 0.0:
        raise SingularFitError("all x values are equal; slope is undetermined")
    slope = float(dx @ (y - y.mean())) / sxx
    intercept = float(y.mean() - slope * xm)
    return slope, intercept


def r_squared(x, y, slope, intercept) -> float:
    resid = y - (slope * x + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    ss_res = float(resid @ resid)
    if ss_tot == 0.0:
        return 1.0 if ss_res <= (EXACT_RTOL * np.abs(y).max()) ** 2 * len(y) else 0.0
    return min(1.0, max(0.0, 1.0 - ss_res / ss_tot))


def _suffix_r2(x, y) -> float:
    slope, intercept = ols(x, y)
    return r_squared(x, y, slope, intercept)


def _sse(x, y) -> float:
    if len(x) < 3:
        return 0.0
    slope, intercept = ols(x, y)
    resid = y - (slope * x + intercept)
    return float(resid @ resid)


def _segment_start(x: np.ndarray, y: np.ndarray, min_points: int) -> int:
    """Index where an under-utilized leading segment ends, or 0 if there is none.

    Every split into a leading segment and a trailing run of at least
    ``min_points`` is scored by the combined residual sum of squares of a
    line fitted to each part. Only splits whose leading points sit above the
    extrapolated trailing line qualify (an idle GPU makes small batches
    slower than linear, never faster). The best split is kept when it beats a
    single line by an F-test at ``KNEE_CONFIDENCE``, Bonferroni-corrected for
    the number of candidate splits; noiseless data keeps it whenever it is
    exact and the single line is not.
    """
    n = len(x)
    if n <= min_points:
        return 0
    tiny = (EXACT_RTOL * float(np.abs(y).max())) ** 2 * n
    sse_one = _sse(x, y)
    if sse_one <= tiny:
        return 0
    splits = []
    for i in range(1, n - min_points + 1):
        slope, intercept = ols(x[i:], y[i:])
        if float(np.mean(y[:i] - (slope * x[:i] + intercept))) <= 0:
            continue
        splits.append((_sse(x[:i], y[:i]) + _sse(x[i:], y[i:]), i))
    if not splits:
        return 0
    best = min(s for s, _ in splits)
    # among (near-)equal splits prefer the longest trailing run
    idx = min(i for s, i in splits if s <= best + tiny)
    if best <= tiny:
        return idx
    df1, df2 = 3, n - 5
    if df2 < 1:
        return 0
    alpha = (1 - KNEE_CONFIDENCE) / (n - min_points)
    f_stat = ((sse_one - best) / df1) / (best / df2)
    return idx if f_stat > stats.f.isf(alpha, df1, df2) else 0


def _hinge_start(x: np.ndarray, y: np.ndarray, min_points: int) -> int:
    """Index where a flat leading segment ends, or 0 if a single line is as good.

    Fits ``y = a*max(x, x[i]) + b`` for every candidate corner ``x[i]``
    leaving at least ``min_points`` points on the sloped part. This is the
    shape of an idle GPU (latency stuck at its floor) and costs one extra
    parameter, so it detects short flat runs the free two-segment test
    misses under noise.
    """
    n = len(x)
    if n <= min_points or n < 5:
        return 0
    sse_one = _sse(x, y)
    tiny = (EXACT_RTOL * float(np.abs(y).max())) ** 2 * n
    if sse_one <= tiny:
        return 0
    fits = []
    for i in range(1, n - min_points + 1):
        xh = np.maximum(x, x[i])
        slope, intercept = ols(xh, y)
        if slope <= 0:
            continue
        resid = y - (slope * xh + intercept)
        fits.append((float(resid @ resid), i))
    if not fits:
        return 0
    best, idx = min(fits)
    if best <= tiny:
        return min(i for s, i in fits if s <= tiny)
    df2 = n - 3
    alpha = (1 - HINGE_CONFIDENCE) / (n - min_points)
    f_stat = (sse_one - best) / (best / df2)
    return idx if f_stat > stats.f.isf(alpha, 1, df2) else 0


def detect_knee(points: Sequence[tuple[float, float]], config: FitConfig = FitConfig()) -> int:
    """Smallest batch size from which latency is linear in batch size.

    Candidates are scanned in increasing order; a start ``b`` is accepted when
    the suffix of points with batch >= b reaches ``r_squared >=
    knee_r2_threshold`` and ``b`` is not before a detected change of regime
    (see ``_segment_start`` and ``_hinge_start``). The r² test alone cannot see a few flat points
    in front of a long linear run, so the regime guard is what keeps
    under-utilized batches out of the latency fit.
    """
    x, y = _as_arrays(points)
    n = len(x)
    if n < config.min_points:
        raise KneeDetectionError(
            f"need at least {config.min_points} points for knee detection, got {n}")
    if len(np.unique(x)) != n:
        raise FitError("duplicate batch sizes in latency points")

    lo = max(_segment_start(x, y, config.min_points), _hinge_start(x, y, config.min_points))
    best_start, best_r2 = None, -1.0
    for i in range(lo, n - config.min_points + 1):
        r2 = _suffix_r2(x[i:], y[i:])
        if r2 >= config.knee_r2_threshold:
            return int(x[i])
        if r2 > best_r2:
            best_start, best_r2 = int(x[i]), r2
    raise KneeDetectionError(
        f"no suffix of >= {config.min_points} points reaches r^2 >= {config.knee_r2_threshold}; "
        f"best starts at batch {best_start} with r^2 = {best_r2:.4f}",
        best_start=best_start, best_r_squared=best_r2)


def sample_indices(n: int, fraction: float, seed: int) -> np.ndarray:
    """Sorted indices of a uniform sample that always keeps both ends."""
    if fraction >= 1 or n <= 2:
        return np.arange(n)
    k = max(2, math.ceil(fraction * n))
    if k >= n:
        return np.arange(n)
    rng = np.random.default_rng(seed)
    inner = rng.choice(np.arange(1, n - 1), size=k - 2, replace=False)
    return np.sort(np.concatenate(([0, n - 1], inner)))


def fit_linear(points: Sequence[tuple[float, float]], config: FitConfig = FitConfig()) -> LinearFit:
    """Least squares line over a seeded sample; quality measured on all points."""
    x, y = _as_arrays(points)
    if len(x) < config.min_points:
        raise FitError(f"need at least {config.min_points} points to fit, got {len(x)}")
    idx = sample_indices(len(x), config.sample_fraction, config.rng_seed)
    slope, intercept = ols(x[idx], y[idx])
    r2 = r_squared(x, y, slope, intercept)
    if np.ptp(y) == 0.0:
        pearson = 0.0
    else:
        pearson = float(np.corrcoef(x, y)[0, 1])
    return LinearFit(slope, intercept, r2, pearson, (int(x[0]), int(x[-1])), len(idx))


def fit_cost_model(series: ProfileSeries, config: FitConfig = FitConfig()) -> CostModel:
    """Fit memory (all measured batches) and latency (batches at or past the knee)."""
    mem_pts = series.memory_points()
    lat_pts = series.latency_points()
    mem_fit = fit_linear(mem_pts, config)
    knee = detect_knee(lat_pts, config)
    lat_fit = fit_linear([p for p in lat_pts if p[0] >= knee], config)

    if mem_fit.slope <= 0:
        raise FitError(f"{series.method_id}: fitted memory slope {mem_fit.slope:.4g} is not positive")
    if lat_fit.slope <= 0:
        raise FitError(f"{series.method_id}: fitted latency slope {lat_fit.slope:.4g} is not positive")
    beta, delta = mem_fit.intercept, lat_fit.intercept
    if beta < 0:
        warnings.warn(f"{series.method_id}: negative fixed memory {beta:.4g} GB clamped to 0")
        beta = 0.0
    if delta < 0:
        warnings.warn(f"{series.method_id}: negative fixed latency {delta:.4g} s clamped to 0")
        delta = 0.0
    return CostModel(
        method_id=series.method_id,
        memory=MemoryModel(mem_fit.slope, beta, mem_fit),
        latency=LatencyModel(lat_fit.slope, delta, lat_fit),
        device_memory=series.device_memory,
        model_id=series.model_id,
        knee_batch=knee,
    )
