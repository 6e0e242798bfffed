"""Univariate and multivariate outlier detectors.

Univariate detectors look at the cumulative bookings in the latest observed
interval only; multivariate detectors treat the whole tau-interval prefix as a
point in tau-dimensional space.  All scores are oriented so that larger means
more outlying, and flags are ``score > threshold`` strictly, which leaves
zero-spread collections outlier-free.
"""

from __future__ import annotations

import warnings

import numpy as np
from scipy.spatial.distance import cdist
from scipy.stats import binom, chi2, poisson

from .base import TauResult

# Percentile limits use the Weibull (type 6) definition h = (n+1)p, matching
# the documented brute-force oracle on small integer samples.
QUANTILE_METHOD = "weibull"


def _last_column(prefix: np.ndarray) -> np.ndarray:
    prefix = np.asarray(prefix, dtype=float)
    if prefix.ndim != 2:
        raise ValueError("expected an N x tau matrix")
    return prefix[:, -1]


def _interval_scores(values: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Signed distance outside [lo, hi]; positive means outside."""
    return np.maximum(lo - values, values - hi)


def percentile_detector(prefix, rng=None, lower: float = 0.025, upper: float = 0.975) -> TauResult:
    """Flag values outside the empirical (lower, upper) percentiles."""
    values = _last_column(prefix)
    if len(values) < 2:
        return TauResult(flags=None)
    lo = float(np.quantile(values, lower, method=QUANTILE_METHOD))
    hi = float(np.quantile(values, upper, method=QUANTILE_METHOD))
    scores = _interval_scores(values, lo, hi)
    return TauResult(flags=scores > 0.0, scores=scores, threshold=0.0)


def wilks_interval_ranks(n: int, coverage: float, confidence: float):
    """Smallest k with P(Binomial(n, coverage) <= k-1) >= confidence, then the
    symmetric order-statistic pair (r, s = k + r).  None when no valid pair
    with 1 <= r < s <= n exists."""
    ks = np.arange(1, n + 1)
    ok = binom.cdf(ks - 1, n, coverage) >= confidence
    if not ok.any():
        return None
    k = int(ks[ok.argmax()])
    r = (n - k + 1) // 2
    s = k + r
    if r < 1 or s > n:
        return None
    return k, r, s


def np_tolerance_detector(
    prefix, rng=None, coverage: float = 0.95, confidence: float = 0.95
) -> TauResult:
    """Wilks nonparametric tolerance interval from order statistics."""
    values = _last_column(prefix)
    n = len(values)
    ranks = wilks_interval_ranks(n, coverage, confidence)
    if ranks is None:
        warnings.warn(
            f"sample of {n} too small for a ({coverage}, {confidence}) tolerance interval;"
            " detector abstains",
            stacklevel=2,
        )
        return TauResult(flags=None)
    _, r, s = ranks
    ordered = np.sort(values)
    lo, hi = float(ordered[r - 1]), float(ordered[s - 1])
    scores = _interval_scores(values, lo, hi)
    return TauResult(flags=scores > 0.0, scores=scores, threshold=0.0)


def poisson_tolerance_bounds(y: int, coverage: float = 0.95, alpha: float = 0.05, n_obs: int = 1):
    """Two-sided Poisson tolerance bounds anchored at observed count ``y``.

    Step 1: chi-square confidence interval for the rate,
    (l, u) = (chi2(alpha/2; 2y) / 2n, chi2(1 - alpha/2; 2y + 2) / 2n), with
    l = 0 at y = 0.  Step 2: the largest L with P(Y > L | l) >= (1+coverage)/2
    and the smallest U with P(Y < U | u) >= (1+coverage)/2.  L is None when no
    lower bound exists.
    """
    if y < 0:
        raise ValueError("observed count must be non-negative")
    half = (1.0 + coverage) / 2.0
    l = chi2.ppf(alpha / 2.0, 2 * y) / (2.0 * n_obs) if y > 0 else 0.0
    u = chi2.ppf(1.0 - alpha / 2.0, 2 * y + 2) / (2.0 * n_obs)
    # P(Y > L | l) >= half  <=>  cdf(L) <= 1 - half
    lower = None
    if l > 0:
        candidate = int(poisson.ppf(1.0 - half, l))
        while candidate >= 0 and poisson.cdf(candidate, l) > 1.0 - half:
            candidate -= 1
        if candidate >= 0:
            lower = candidate
    # P(Y < U | u) = cdf(U - 1) >= half
    upper = int(poisson.ppf(half, u)) + 1
    while poisson.cdf(upper - 1, u) < half:
        upper += 1
    while upper > 1 and poisson.cdf(upper - 2, u) >= half:
        upper -= 1
    return lower, upper, l, u


def poisson_tolerance_detector(
    prefix, rng=None, coverage: float = 0.95, alpha: float = 0.05
) -> TauResult:
    """Parametric (Poisson) tolerance interval; the collection median at the
    interval anchors the observed count."""
    values = _last_column(prefix)
    y = int(np.floor(np.median(values) + 0.5))
    lower, upper, _, _ = poisson_tolerance_bounds(y, coverage, alpha)
    lo = -np.inf if lower is None else float(lower)
    scores = _interval_scores(values, lo, float(upper))
    return TauResult(flags=scores > 0.0, scores=scores, threshold=0.0)


def robust_z_detector(prefix, rng=None, cutoff: float = 3.5) -> TauResult:
    """Median/MAD z-score: flag |0.6745 (y - median) / MAD| above the cutoff.

    With MAD = 0 every value different from the median is flagged.
    """
    values = _last_column(prefix)
    med = np.median(values)
    mad = np.median(np.abs(values - med))
    if mad == 0:
        scores = np.where(values == med, 0.0, np.inf)
    else:
        scores = np.abs(0.6745 * (values - med) / mad)
    return TauResult(flags=scores > cutoff, scores=scores, threshold=cutoff)


def _pairwise(prefix: np.ndarray, metric: str) -> np.ndarray:
    if metric not in ("euclidean", "manhattan"):
        raise ValueError("metric must be 'euclidean' or 'manhattan'")
    return cdist(prefix, prefix, metric="cityblock" if metric == "manhattan" else "euclidean")


def distance_detector(prefix, rng=None, metric: str = "euclidean", n_sigma: float = 3.0) -> TauResult:
    """Mean distance to all other patterns, flagged beyond mean + 3 sd."""
    prefix = np.asarray(prefix, dtype=float)
    n = len(prefix)
    if n < 3:
        return TauResult(flags=None)
    d = _pairwise(prefix, metric)
    mean_dist = d.sum(axis=1) / (n - 1)
    thr = float(mean_dist.mean() + n_sigma * mean_dist.std(ddof=1))
    return TauResult(flags=mean_dist > thr, scores=mean_dist, threshold=thr)


def _init_centers(prefix, k, rng, init):
    n = len(prefix)
    if init == "random":
        idx = rng.choice(n, size=k, replace=False)
        return prefix[idx].astype(float)
    # farthest-first from a seeded random start: deterministic given the rng
    centers = [prefix[int(rng.integers(n))].astype(float)]
    while len(centers) < k:
        d = cdist(prefix, np.asarray(centers)).min(axis=1)
        centers.append(prefix[int(d.argmax())].astype(float))
    return np.asarray(centers)


def kmeans_detector(
    prefix,
    rng,
    metric: str = "euclidean",
    k: int = 2,
    max_iter: int = 100,
    init: str = "farthest",
) -> TauResult:
    """Lloyd clustering, then flag patterns strictly beyond half the sum of
    the maximum and minimum distances to their cluster centres."""
    prefix = np.asarray(prefix, dtype=float)
    n = len(prefix)
    if n < k:
        return TauResult(flags=None)
    sp_metric = "cityblock" if metric == "manhattan" else "euclidean"
    if metric not in ("euclidean", "manhattan"):
        raise ValueError("metric must be 'euclidean' or 'manhattan'")
    centers = _init_centers(prefix, k, rng, init)
    assign = np.full(n, -1)
    for _ in range(max_iter):
        d = cdist(prefix, centers, metric=sp_metric)
        new_assign = d.argmin(axis=1)
        for c in range(k):
            if not (new_assign == c).any():
                farthest = int(d[np.arange(n), new_assign].argmax())
                centers[c] = prefix[farthest]
                new_assign[farthest] = c
        if np.array_equal(new_assign, assign):
            break
        assign = new_assign
        for c in range(k):
            centers[c] = prefix[assign == c].mean(axis=0)
    d_own = cdist(prefix, centers, metric=sp_metric)[np.arange(n), assign]
    thr = float((d_own.max() + d_own.min()) / 2.0)
    return TauResult(flags=d_own > thr, scores=d_own, threshold=thr)
