"""Shared detector interface.

Every detector maps the prefix matrix of a collection (N patterns observed
over the first tau intervals) to a per-pattern outlier score, a threshold on
that scale, and boolean flags.  Flags follow ``score > threshold`` strictly,
except for the functional detector whose iterative trimming can add flags
beyond the initial threshold crossing (its scores stay informative for ROC
sweeps).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class TauResult:
    """Outcome of one detector at one interval.  ``flags`` is None when the
    detector abstains (sample too small for its guarantees).  ``extra``
    carries method-specific payloads (the functional detector reports the
    trimming pass that flagged each pattern)."""

    flags: "np.ndarray | None"
    scores: "np.ndarray | None" = None
    threshold: float = float("nan")
    extra: dict = field(default_factory=dict)


@dataclass
class DetectionRun:
    """Per-interval classifications of a collection by one detector."""

    method: str
    flags: np.ndarray          # N x T, False where not evaluated
    scores: np.ndarray         # N x T, NaN where unavailable
    thresholds: np.ndarray     # length T, NaN where not evaluated
    evaluated: np.ndarray      # length T bools
    extras: dict = field(default_factory=dict)  # tau -> method-specific payload

    @classmethod
    def empty(cls, method: str, n_patterns: int, n_intervals: int) -> "DetectionRun":
        return cls(
            method=method,
            flags=np.zeros((n_patterns, n_intervals), dtype=bool),
            scores=np.full((n_patterns, n_intervals), np.nan),
            thresholds=np.full(n_intervals, np.nan),
            evaluated=np.zeros(n_intervals, dtype=bool),
        )

    def record(self, tau: int, result: TauResult) -> None:
        if result.flags is None:
            return
        col = tau - 1
        self.flags[:, col] = result.flags
        if result.scores is not None:
            self.scores[:, col] = result.scores
        self.thresholds[col] = result.threshold
        self.evaluated[col] = True
        if result.extra:
            self.extras[tau] = result.extra


@dataclass(frozen=True)
class DetectorSpec:
    """A detector choice plus parameters and an optional extrapolation step.

    With ``extrapolation`` set, prefixes are completed to full horizon length
    by the named univariate forecaster before the detector runs.
    """

    method: str
    params: dict = field(default_factory=dict)
    extrapolation: "str | None" = None

    @property
    def name(self) -> str:
        if self.extrapolation:
            return f"{self.method}+{self.extrapolation}"
        return self.method


def available_methods() -> dict:
    from . import baseline, functional

    return {
        "percentile": baseline.percentile_detector,
        "np_tolerance": baseline.np_tolerance_detector,
        "poisson_tolerance": baseline.poisson_tolerance_detector,
        "robust_z": baseline.robust_z_detector,
        "distance_euclidean": lambda X, rng, **kw: baseline.distance_detector(
            X, rng, metric="euclidean", **kw
        ),
        "distance_manhattan": lambda X, rng, **kw: baseline.distance_detector(
            X, rng, metric="manhattan", **kw
        ),
        "kmeans_euclidean": lambda X, rng, **kw: baseline.kmeans_detector(
            X, rng, metric="euclidean", **kw
        ),
        "kmeans_manhattan": lambda X, rng, **kw: baseline.kmeans_detector(
            X, rng, metric="manhattan", **kw
        ),
        "functional_depth": functional.functional_detector,
    }


def run_detector(spec: DetectorSpec, prefix: np.ndarray, rng) -> TauResult:
    """Run one detector on an N x tau prefix matrix (already extrapolated when
    the detector spec asks for completion; evaluate.foresight_sweep owns that
    step)."""
    methods = available_methods()
    if spec.method not in methods:
        raise ValueError(
            f"unknown detector {spec.method!r}; valid: {', '.join(sorted(methods))}"
        )
    return methods[spec.method](prefix, rng, **spec.params)
