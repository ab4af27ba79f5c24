"""Statistical primitives used by the insight discovery pipeline.

Pure numeric routines: arrays in, result objects out. No knowledge of
features, dates, or configuration lives here.

* :func:`mann_whitney_u` — two-sided location test between two samples,
  exact for small samples and tie-corrected normal approximation otherwise;
* :func:`mann_kendall` — monotonic trend test with tie-corrected variance;
* :func:`autocorrelation` — lag-k autocorrelation for cycle detection;
* :func:`coefficient_of_variation` — relative dispersion for stability
  classification;
* :func:`robust_residuals` — seasonal-trend decomposition residuals
  (LOESS-based when the series is long enough, moving-median otherwise);
* :func:`mad_outliers` — robust residual outlier flags with spike/dip signs.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.stats import norm
from statsmodels.tsa.seasonal import STL

# Consistency constant relating MAD to the standard deviation of a normal
# distribution, and the equivalent for the interquartile range.
MAD_TO_SD = 1.4826
IQR_TO_SD = 1.349

# Largest per-group sample size for which the exact permutation distribution
# of the rank-sum statistic is enumerated (C(16, 8) = 12870 assignments).
EXACT_MAX_N = 8


class StatsError(ValueError):
    """Base class for statistical precondition failures."""


class EmptySampleError(StatsError):
    """A test received an empty sample."""


class TooFewPointsError(StatsError):
    """A routine received fewer points than it can operate on."""


class SeriesTooShortError(StatsError):
    """A series is too short to decompose."""


class ZeroMeanError(StatsError):
    """Relative dispersion is undefined for a zero-mean sample."""


class ZeroVarianceError(StatsError):
    """Autocorrelation is undefined for a constant sample."""


# ---------------------------------------------------------------------------
# Mann-Whitney U


@dataclass(frozen=True)
class MannWhitneyResult:
    u1: float
    n1: int
    n2: int
    p_value: float
    method: str  # "exact" | "normal"


def _midranks(pooled: np.ndarray) -> np.ndarray:
    """Midranks (1-based, ties averaged) of ``pooled``."""
    order = np.argsort(pooled, kind="mergesort")
    ranks = np.empty(len(pooled), dtype=float)
    sorted_vals = pooled[order]
    i = 0
    while i < len(sorted_vals):
        j = i
        while j + 1 < len(sorted_vals) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        # Average of ranks i+1 .. j+1.
        ranks[order[i : j + 1]] = (i + j + 2) / 2.0
        i = j + 1
    return ranks


def _u_statistic(x: np.ndarray, y: np.ndarray) -> float:
    """U for sample one: pairwise wins plus half-credit for ties."""
    greater = np.sum(x[:, None] > y[None, :])
    ties = np.sum(x[:, None] == y[None, :])
    return float(greater) + 0.5 * float(ties)


def _tie_term(pooled: np.ndarray) -> float:
    """Sum of t^3 - t over tie groups of the pooled sample."""
    _, counts = np.unique(pooled, return_counts=True)
    return float(np.sum(counts.astype(float) ** 3 - counts))


def mann_whitney_u(
    sample1: Sequence[float], sample2: Sequence[float]
) -> MannWhitneyResult:
    """Two-sided Mann-Whitney U test.

    The U statistic counts, over all cross pairs, how often a value from
    ``sample1`` exceeds one from ``sample2``, with ties counting one half.
    When both samples have at most :data:`EXACT_MAX_N` observations the
    p-value is computed exactly by enumerating every assignment of the pooled
    values to the two groups; otherwise a tie-corrected normal approximation
    with continuity correction is used.
    """
    x = np.asarray(list(sample1), dtype=float)
    y = np.asarray(list(sample2), dtype=float)
    if x.size == 0 or y.size == 0:
        raise EmptySampleError(
            f"both samples must be non-empty (got sizes {x.size} and {y.size})"
        )
    if np.isnan(x).any() or np.isnan(y).any():
        raise StatsError("samples must not contain NaN")

    n1, n2 = int(x.size), int(y.size)
    n = n1 + n2
    u_obs = _u_statistic(x, y)
    mu = n1 * n2 / 2.0

    if min(n1, n2) <= EXACT_MAX_N:
        # Exact permutation distribution via midrank subset sums: the ranks of
        # the pooled multiset are fixed, so U for any assignment is the rank
        # sum of the group-one subset minus n1(n1+1)/2.  All values involved
        # are exact multiples of 0.5, so comparisons below are exact.
        pooled = np.concatenate([x, y])
        ranks = _midranks(pooled)
        combos = np.fromiter(
            itertools.chain.from_iterable(itertools.combinations(range(n), n1)),
            dtype=np.intp,
        ).reshape(-1, n1)
        u_all = ranks[combos].sum(axis=1) - n1 * (n1 + 1) / 2.0
        extreme = np.abs(u_all - mu) >= abs(u_obs - mu)
        p = float(np.count_nonzero(extreme)) / float(len(u_all))
        return MannWhitneyResult(u1=u_obs, n1=n1, n2=n2, p_value=p, method="exact")

    sigma_sq = (n1 * n2 * (n + 1)) / 12.0 - (
        n1 * n2 * _tie_term(np.concatenate([x, y]))
    ) / (12.0 * n * (n - 1))
    if sigma_sq <= 0:
        return MannWhitneyResult(u1=u_obs, n1=n1, n2=n2, p_value=1.0, method="normal")
    sigma = math.sqrt(sigma_sq)
    # Continuity correction pulls the statistic half a unit toward the mean.
    shift = abs(u_obs - mu) - 0.5
    z = max(shift, 0.0) / sigma
    p = min(1.0, 2.0 * float(norm.sf(z)))
    return MannWhitneyResult(u1=u_obs, n1=n1, n2=n2, p_value=p, method="normal")


# ---------------------------------------------------------------------------
# Mann-Kendall


@dataclass(frozen=True)
class MannKendallResult:
    s: int
    var_s: float
    z: float
    p_value: float
    n: int


def mann_kendall(values: Sequence[float]) -> MannKendallResult:
    """Two-sided Mann-Kendall monotonic trend test.

    ``S`` sums the signs of all forward differences; its variance is
    tie-corrected, and the z statistic applies a continuity correction of one
    in the direction of the null.
    """
    arr = np.asarray(list(values), dtype=float)
    if arr.size < 4:
        raise TooFewPointsError(f"trend test needs >= 4 points, got {arr.size}")
    if np.isnan(arr).any():
        raise StatsError("series must not contain NaN")

    n = int(arr.size)
    sign_matrix = np.sign(arr[None, :] - arr[:, None])
    s = int(np.sum(np.triu(sign_matrix, k=1)))

    _, counts = np.unique(arr, return_counts=True)
    tie_term = float(np.sum(counts * (counts - 1) * (2 * counts + 5)))
    var_s = (n * (n - 1) * (2 * n + 5) - tie_term) / 18.0

    if var_s <= 0:
        return MannKendallResult(s=s, var_s=0.0, z=0.0, p_value=1.0, n=n)
    if s > 0:
        z = (s - 1) / math.sqrt(var_s)
    elif s < 0:
        z = (s + 1) / math.sqrt(var_s)
    else:
        z = 0.0
    p = min(1.0, 2.0 * float(norm.sf(abs(z))))
    return MannKendallResult(s=s, var_s=var_s, z=z, p_value=p, n=n)


# ---------------------------------------------------------------------------
# Autocorrelation and dispersion


def autocorrelation(values: Sequence[float], lag: int) -> float:
    """Lag-``lag`` autocorrelation, normalized by the lag-0 autocovariance."""
    if lag < 1:
        raise StatsError(f"lag must be >= 1, got {lag}")
    arr = np.asarray(list(values), dtype=float)
    if arr.size < 2 * lag:
        raise SeriesTooShortError(
            f"autocorrelation at lag {lag} needs >= {2 * lag} points, got {arr.size}"
        )
    if np.isnan(arr).any():
        raise StatsError("series must not contain NaN")
    centered = arr - arr.mean()
    denom = float(np.dot(centered, centered))
    if denom == 0.0:
        raise ZeroVarianceError("autocorrelation undefined for a constant series")
    num = float(np.dot(centered[:-lag], centered[lag:]))
    return num / denom


def coefficient_of_variation(values: Sequence[float]) -> float:
    """Sample standard deviation over the absolute mean."""
    arr = np.asarray(list(values), dtype=float)
    if arr.size < 2:
        raise TooFewPointsError(f"dispersion needs >= 2 points, got {arr.size}")
    if np.isnan(arr).any():
        raise StatsError("series must not contain NaN")
    mean = float(arr.mean())
    if mean == 0.0:
        raise ZeroMeanError("relative dispersion undefined for zero-mean data")
    return float(arr.std(ddof=1)) / abs(mean)


# ---------------------------------------------------------------------------
# Decomposition residuals and robust outliers


def _moving_median_detrend(arr: np.ndarray, window: int) -> np.ndarray:
    """Residuals against a centered moving median; edges shrink the window."""
    half = window // 2
    trend = np.empty_like(arr)
    for i in range(arr.size):
        lo = max(0, i - half)
        hi = min(arr.size, i + half + 1)
        trend[i] = np.median(arr[lo:hi])
    return arr - trend


def robust_residuals(values: Sequence[float], period: int) -> np.ndarray:
    """Residuals after removing trend and seasonality from a regular series.

    Series at least two periods long are decomposed with a robust
    LOESS-based seasonal-trend fit; shorter series fall back to a centered
    moving-median detrend (window 7 or the series length, forced odd).
    Series shorter than four points cannot be decomposed at all.
    """
    arr = np.asarray(list(values), dtype=float)
    if arr.size < 4:
        raise SeriesTooShortError(
            f"decomposition needs >= 4 points, got {arr.size}"
        )
    if np.isnan(arr).any():
        raise StatsError("series must not contain NaN")
    if arr.size >= 2 * period:
        result = STL(arr, period=period, robust=True).fit()
        resid = np.asarray(result.resid, dtype=float)
        # A degenerate fit (e.g. constant input) leaves float-rounding dust
        # instead of exact zeros; its nonzero MAD would then inflate every
        # score.  When nothing in the residual rises above rounding error
        # relative to the input's magnitude, the decomposition was exact.
        tolerance = 1e-9 * max(1.0, float(np.max(np.abs(arr))))
        if float(np.max(np.abs(resid))) < tolerance:
            return np.zeros_like(resid)
        return resid
    window = min(7, arr.size)
    if window % 2 == 0:
        window -= 1
    return _moving_median_detrend(arr, window)


@dataclass(frozen=True)
class OutlierFlag:
    index: int
    score: float
    is_spike: bool  # residual above the median (below means a dip)


def mad_outliers(
    residuals: Sequence[float],
    threshold: float = 3.5,
    mask: Optional[Sequence[bool]] = None,
) -> list[OutlierFlag]:
    """Flag residuals whose robust z-score exceeds ``threshold``.

    The scale is the median absolute deviation (scaled to the normal);
    when the MAD degenerates to zero the interquartile range takes over,
    and if both are zero nothing is flagged.  ``mask`` restricts which
    indices may be flagged (scale is still estimated from all residuals).
    """
    arr = np.asarray(list(residuals), dtype=float)
    if arr.size == 0:
        return []
    med = float(np.median(arr))
    mad = float(np.median(np.abs(arr - med)))
    scale = MAD_TO_SD * mad
    if scale == 0.0:
        q75, q25 = np.percentile(arr, [75, 25])
        scale = float(q75 - q25) / IQR_TO_SD
    if scale == 0.0:
        return []

    flags: list[OutlierFlag] = []
    for i, resid in enumerate(arr):
        if mask is not None and not mask[i]:
            continue
        score = abs(resid - med) / scale
        if score > threshold:
            flags.append(OutlierFlag(index=i, score=score, is_spike=resid > med))
    return flags


__all__ = [
    "EXACT_MAX_N",
    "EmptySampleError",
    "IQR_TO_SD",
    "MAD_TO_SD",
    "MannKendallResult",
    "MannWhitneyResult",
    "OutlierFlag",
    "SeriesTooShortError",
    "StatsError",
    "TooFewPointsError",
    "ZeroMeanError",
    "ZeroVarianceError",
    "autocorrelation",
    "coefficient_of_variation",
    "mad_outliers",
    "mann_kendall",
    "mann_whitney_u",
    "robust_residuals",
]
