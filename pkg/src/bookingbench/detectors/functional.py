"""Functional halfspace depth, bootstrap threshold, and iterative trimming.

The depth of a curve observed at intervals t_1..t_tau is the weighted sum of
per-interval univariate halfspace depths

    MFHD(y; alpha) = sum_j w(t_j) * HD_j(y(t_j)),

where HD counts the smaller of the sample fractions at or above / at or below
the value, and the weight of interval j is proportional to the time step times
the length of the region whose depth is at least alpha (between the
ceil(N*alpha)-th smallest and largest sample values).  The horizon is padded
with a phantom boundary half a step beyond the last interval, so on an equal
grid every interval weighs the same except the last, which weighs half.

The outlier threshold follows the depth-weighted smoothed bootstrap: resample
curves with probability proportional to depth, perturb with Gaussian noise of
covariance gamma * Sigma, take each replicate's 1st depth percentile, and use
the median over replicates.  Detection then alternates flagging depths below
the threshold with depth recomputation on the trimmed sample until no new
flags appear.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..rng import rng_from
from .base import TauResult

DEPTH_REGION_ALPHA = 0.125
SMOOTHING_GAMMA = 0.05
BOOTSTRAP_SAMPLES = 1000
THRESHOLD_PERCENTILE = 0.01
MIN_COLLECTION = 10
_WEIGHT_EPS = 1e-12


def halfspace_depth_1d(sample, x: float) -> float:
    """min(#{y <= x}, #{y >= x}) / N for a univariate sample."""
    sample = np.sort(np.asarray(sample, dtype=float))
    n = len(sample)
    if n == 0:
        raise ValueError("sample must be non-empty")
    n_leq = int(np.searchsorted(sample, x, side="right"))
    n_geq = n - int(np.searchsorted(sample, x, side="left"))
    return min(n_leq, n_geq) / n


def _column_depths(X: np.ndarray) -> np.ndarray:
    """Per-interval halfspace depth of every pattern value (N x tau)."""
    n = len(X)
    depths = np.empty_like(X, dtype=float)
    for j in range(X.shape[1]):
        col = X[:, j]
        order = np.sort(col)
        n_leq = np.searchsorted(order, col, side="right")
        n_geq = n - np.searchsorted(order, col, side="left")
        depths[:, j] = np.minimum(n_leq, n_geq) / n
    return depths


def _region_lengths(X: np.ndarray, alpha: float) -> np.ndarray:
    """Length of the univariate alpha-depth region per interval."""
    n = len(X)
    m = int(np.ceil(n * alpha))
    if m < 1 or 2 * m > n + 1:
        return np.zeros(X.shape[1])
    ordered = np.sort(X, axis=0)
    return np.maximum(0.0, ordered[n - m] - ordered[m - 1])


def _interval_weights(X: np.ndarray, alpha: float) -> np.ndarray:
    tau = X.shape[1]
    steps = np.ones(tau)
    steps[-1] = 0.5
    if tau == 1:
        steps[:] = 1.0
    raw = steps * _region_lengths(X, alpha)
    total = raw.sum()
    if total <= 0:
        raise ValueError("all interval weights are zero; no usable depth regions")
    return raw / total


@dataclass
class DepthResult:
    depths: np.ndarray
    weights: np.ndarray
    alpha: float


def mfhd(X, alpha: float = DEPTH_REGION_ALPHA) -> DepthResult:
    """Multivariate functional halfspace depth of every pattern in X (N x tau)."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or len(X) < 2:
        raise ValueError("need an N x tau matrix with N >= 2")
    if not 0.0 < alpha <= 0.5:
        raise ValueError("alpha must lie in (0, 0.5]")
    weights = _interval_weights(X, alpha)
    depths = _column_depths(X) @ weights
    return DepthResult(depths=depths, weights=weights, alpha=alpha)


def _depths_only(X: np.ndarray, alpha: float) -> np.ndarray:
    return _column_depths(X) @ _interval_weights(X, alpha)


def bootstrap_threshold(
    X,
    seed,
    n_boot: int = BOOTSTRAP_SAMPLES,
    percentile: float = THRESHOLD_PERCENTILE,
    gamma: float = SMOOTHING_GAMMA,
    alpha: float = DEPTH_REGION_ALPHA,
    depths: "np.ndarray | None" = None,
) -> float:
    """Depth threshold from the smoothed, depth-weighted bootstrap."""
    X = np.asarray(X, dtype=float)
    if n_boot < 1:
        raise ValueError("need at least one bootstrap replicate")
    n, tau = X.shape
    if depths is None:
        depths = mfhd(X, alpha).depths
    probs = depths + _WEIGHT_EPS
    probs = probs / probs.sum()

    chol = None
    diag_sd = None
    if gamma > 0:
        sigma = np.cov(X, rowvar=False).reshape(tau, tau)
        try:
            chol = np.linalg.cholesky(gamma * sigma)
        except np.linalg.LinAlgError:
            diag_sd = np.sqrt(gamma * np.clip(np.diag(sigma), 0.0, None))

    rng = rng_from(seed)
    cutoffs = np.empty(n_boot)
    for b in range(n_boot):
        idx = rng.choice(n, size=n, p=probs)
        sample = X[idx]
        if chol is not None:
            sample = sample + rng.standard_normal((n, tau)) @ chol.T
        elif diag_sd is not None:
            sample = sample + rng.standard_normal((n, tau)) * diag_sd
        try:
            cutoffs[b] = np.quantile(_depths_only(sample, alpha), percentile)
        except ValueError:
            # fully degenerate replicate carries no tail information
            cutoffs[b] = np.quantile(depths, percentile)
    return float(np.median(cutoffs))


def functional_detector(
    prefix,
    rng_or_seed,
    alpha: float = DEPTH_REGION_ALPHA,
    n_boot: int = BOOTSTRAP_SAMPLES,
    percentile: float = THRESHOLD_PERCENTILE,
    gamma: float = SMOOTHING_GAMMA,
    min_collection: int = MIN_COLLECTION,
) -> TauResult:
    """Iterative depth trimming against a bootstrap threshold.

    The threshold is estimated once on the full collection; depths are then
    recomputed on the surviving sample after each trimming pass until no
    pattern falls below the threshold.  Flags accumulate across passes.
    """
    X = np.asarray(prefix, dtype=float)
    n = len(X)
    if n < min_collection:
        return TauResult(flags=None)
    rng = rng_from(rng_or_seed) if not isinstance(rng_or_seed, np.random.Generator) else rng_or_seed
    try:
        initial = mfhd(X, alpha)
    except ValueError:
        # no dispersion anywhere: nothing can be outlying
        return TauResult(
            flags=np.zeros(n, dtype=bool),
            scores=np.zeros(n),
            threshold=float("nan"),
            extra={"iteration_flagged": np.zeros(n, dtype=int)},
        )
    threshold = bootstrap_threshold(
        X,
        rng,
        n_boot=n_boot,
        percentile=percentile,
        gamma=gamma,
        alpha=alpha,
        depths=initial.depths,
    )
    flags = np.zeros(n, dtype=bool)
    iteration_flagged = np.zeros(n, dtype=int)
    active = np.arange(n)
    depths = initial.depths
    for sweep in range(1, n + 1):
        newly = depths < threshold
        if not newly.any():
            break
        flags[active[newly]] = True
        iteration_flagged[active[newly]] = sweep
        active = active[~newly]
        if len(active) < 2:
            break
        try:
            depths = _depths_only(X[active], alpha)
        except ValueError:
            break
    return TauResult(
        flags=flags,
        scores=-initial.depths,
        threshold=-threshold,
        extra={"iteration_flagged": iteration_flagged},
    )
