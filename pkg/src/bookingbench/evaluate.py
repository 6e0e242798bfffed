"""Detection scoring (BCR, TPR, FPR, LR+, ROC) and experiment orchestration.

Foresight sweeps run every detector on tau-prefixes for tau = 2..T, optionally
completing prefixes to full length by a univariate extrapolation first;
hindsight is the tau = T slice of the same machinery.  Confusion counts from
repeated collections are pooled before rates are formed, which keeps the
per-interval averages stable when each collection contains only a handful of
true outliers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .controls import compute_controls
from .demand import make_volume_outlier, sample_requests
from .detectors.base import DetectionRun, DetectorSpec, run_detector
from .extrapolate import complete_collection
from .forecast import forecast_demand
from .rng import rng_from, seed_sequence
from .scenario import DemandScenario
from .simulate import (
    PatternCollection,
    run_horizon,
    run_horizon_with_correction,
)
from ._parallel import parallel_map


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0

    def __post_init__(self):
        if min(self.tp, self.tn, self.fp, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    @staticmethod
    def from_flags(flags: np.ndarray, truth: np.ndarray) -> "ConfusionCounts":
        flags = np.asarray(flags, dtype=bool)
        truth = np.asarray(truth, dtype=bool)
        return ConfusionCounts(
            tp=int((flags & truth).sum()),
            tn=int((~flags & ~truth).sum()),
            fp=int((flags & ~truth).sum()),
            fn=int((~flags & truth).sum()),
        )

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(
            self.tp + other.tp, self.tn + other.tn, self.fp + other.fp, self.fn + other.fn
        )


def tpr(c: ConfusionCounts) -> float:
    pos = c.tp + c.fn
    return c.tp / pos if pos else math.nan


def fpr(c: ConfusionCounts) -> float:
    neg = c.fp + c.tn
    return c.fp / neg if neg else math.nan


def bcr(c: ConfusionCounts) -> float:
    """Balanced classification rate: mean of TPR and TNR; NaN when either
    class is empty."""
    if (c.tp + c.fn) == 0 or (c.tn + c.fp) == 0:
        return math.nan
    return 0.5 * (tpr(c) + (1.0 - fpr(c)))


def lr_plus(c: ConfusionCounts) -> float:
    """Positive likelihood ratio TPR / FPR; +inf when FPR = 0 but TPR > 0,
    NaN when both rates are zero or a class is empty."""
    t, f = tpr(c), fpr(c)
    if math.isnan(t) or math.isnan(f):
        return math.nan
    if f == 0.0:
        return math.inf if t > 0 else math.nan
    return t / f


@dataclass(frozen=True)
class RocCurve:
    """(fpr, tpr, threshold) points sorted by ascending threshold."""

    points: tuple

    @property
    def auc(self) -> float:
        pts = sorted((f, t) for f, t, _ in self.points)
        xs = [0.0] + [f for f, _ in pts] + [1.0]
        ys = [0.0] + [t for _, t in pts] + [1.0]
        return float(np.trapezoid(ys, xs))


def roc_sweep(scores, truth, n_thresholds: "int | None" = None) -> RocCurve:
    """One (fpr, tpr) point per threshold, flagging ``score > threshold``.

    Thresholds default to all distinct score values (plus one above the
    maximum so the all-negative corner is included); ``n_thresholds`` switches
    to an evenly spaced grid over the score range.
    """
    scores = np.asarray(scores, dtype=float)
    truth = np.asarray(truth, dtype=bool)
    if not np.isfinite(scores).all():
        raise ValueError("scores must be finite")
    if n_thresholds is None:
        uniq = np.unique(scores)
        thresholds = np.concatenate([uniq - 0.0, [uniq[-1] + 1.0]])
    else:
        lo, hi = scores.min(), scores.max()
        thresholds = np.linspace(lo - 1e-9, hi + 1e-9, max(int(n_thresholds), 2))
    pts = []
    for thr in thresholds:
        c = ConfusionCounts.from_flags(scores > thr, truth)
        pts.append((fpr(c), tpr(c), float(thr)))
    pts.sort(key=lambda p: p[2])
    return RocCurve(points=tuple(pts))


@dataclass
class DetectionCell:
    """Scores of one detector at one interval (possibly pooled over reps)."""

    detector: str
    tau: int
    counts: ConfusionCounts
    evaluated: bool = True

    def rates(self) -> dict:
        c = self.counts
        return {
            "detector": self.detector,
            "tau": self.tau,
            "tp": c.tp,
            "tn": c.tn,
            "fp": c.fp,
            "fn": c.fn,
            "tpr": tpr(c),
            "fpr": fpr(c),
            "bcr": bcr(c),
            "lr_plus": lr_plus(c),
            "evaluated": self.evaluated,
        }


@dataclass
class SweepReport:
    cells: list
    runs: dict = field(default_factory=dict)

    def cell(self, detector: str, tau: int) -> DetectionCell:
        for c in self.cells:
            if c.detector == detector and c.tau == tau:
                return c
        raise KeyError(f"no cell for {detector!r} at tau={tau}")

    def rows(self) -> list[dict]:
        return [c.rates() for c in self.cells]


def _detect_at_tau(spec: DetectorSpec, matrix, tau, horizon, capacity, seed, rep_key):
    prefix = matrix[:, :tau].astype(float)
    if spec.extrapolation and tau < horizon:
        prefix, _ = complete_collection(prefix, horizon, spec.extrapolation, capacity)
    rng = rng_from(seed, *rep_key)
    return run_detector(spec, prefix, rng)


def foresight_sweep(
    collection: PatternCollection,
    detectors,
    seed,
    taus=None,
    capacity=None,
    rep_index: int = 0,
) -> SweepReport:
    """Per-interval detection report for one collection.

    Detector d at interval tau sees only the first tau columns (completed to
    the full horizon first when its detector spec names an extrapolation) and draws its
    randomness from the child stream (seed, rep_index, detector_index, tau).
    """
    matrix = collection.matrix()
    truth = collection.truth()
    horizon = collection.n_intervals
    taus = list(taus) if taus is not None else list(range(2, horizon + 1))
    cells = []
    runs = {}
    for d_idx, spec in enumerate(detectors):
        run = DetectionRun.empty(spec.name, len(collection), horizon)
        for tau in taus:
            result = _detect_at_tau(
                spec, matrix, tau, horizon, capacity, seed, (rep_index, d_idx, tau)
            )
            run.record(tau, result)
            if result.flags is None:
                cells.append(
                    DetectionCell(spec.name, tau, ConfusionCounts(), evaluated=False)
                )
            else:
                cells.append(
                    DetectionCell(spec.name, tau, ConfusionCounts.from_flags(result.flags, truth))
                )
        runs[spec.name] = run
    return SweepReport(cells=cells, runs=runs)


def hindsight_report(collection: PatternCollection, detectors, seed) -> SweepReport:
    """Full-pattern detection: the tau = T special case of the sweep."""
    return foresight_sweep(collection, detectors, seed, taus=[collection.n_intervals])


def pool_reports(reports) -> SweepReport:
    """Pool confusion counts cell-wise across replications; a cell counts as
    evaluated when every replication evaluated it."""
    pooled: dict = {}
    evaluated: dict = {}
    for rep in reports:
        for cell in rep.cells:
            key = (cell.detector, cell.tau)
            pooled[key] = pooled.get(key, ConfusionCounts()) + cell.counts
            evaluated[key] = evaluated.get(key, True) and cell.evaluated
    cells = [
        DetectionCell(det, tau, counts, evaluated[(det, tau)])
        for (det, tau), counts in pooled.items()
    ]
    cells.sort(key=lambda c: (c.detector, c.tau))
    return SweepReport(cells=cells)


# --- revenue gain from correcting outlier forecasts --------------------------

def _revenue_pair(args):
    (rep, outlier_scenario, controls, corrected_fc, correction_interval, seed, key) = args
    stream = sample_requests(outlier_scenario, rng_from(seed, key, rep))
    fs = outlier_scenario.fare_structure
    uncorrected = run_horizon(stream, controls, fs, outlier_scenario.n_intervals)
    corrected = run_horizon_with_correction(
        stream, controls, corrected_fc, outlier_scenario, correction_interval
    )
    return uncorrected.final_revenue, corrected.final_revenue


def revenue_gain_experiment(
    base: DemandScenario,
    outlier_pcts,
    correction_intervals,
    heuristic: str,
    n_reps: int,
    seed,
    forecast_runs: int = 100,
    workers: int = 1,
) -> list[dict]:
    """Percentage revenue change from re-optimising controls at a given
    interval using the true outlier scenario's forecast.

    Controls come from the base (regular) forecast; every replication draws
    one outlier horizon and compares never-correcting against correcting at
    the given interval, on the same request stream.  Detection is idealised:
    every outlier is corrected and regular patterns are never touched, which
    makes uncorrected-vs-corrected a paired comparison on outlier horizons
    only.
    """
    if n_reps < 1:
        raise ValueError("need at least one replication")
    fs = base.fare_structure
    demand_factor = base.gamma_shape / base.gamma_rate / fs.capacity
    base_fc = forecast_demand(base, forecast_runs, seed_sequence(seed, 600_000))
    controls = compute_controls(base_fc, fs, heuristic)
    rows = []
    for p_idx, pct in enumerate(outlier_pcts):
        outlier = make_volume_outlier(base, pct)
        corrected_fc = forecast_demand(outlier, forecast_runs, seed_sequence(seed, 600_001, p_idx))
        for t_idx, tau in enumerate(correction_intervals):
            key = 1000 * (p_idx + 1) + t_idx
            jobs = [
                (rep, outlier, controls, corrected_fc, tau, seed, key)
                for rep in range(n_reps)
            ]
            pairs = np.asarray(parallel_map(_revenue_pair, jobs, workers))
            base_rev = pairs[:, 0]
            corr_rev = pairs[:, 1]
            delta = corr_rev - base_rev
            mean_base = float(base_rev.mean())
            pct_change = 100.0 * float(delta.mean()) / mean_base
            se = float(delta.std(ddof=1) / math.sqrt(n_reps)) if n_reps > 1 else 0.0
            half = 100.0 * 1.96 * se / mean_base
            rows.append(
                {
                    "heuristic": heuristic,
                    "demand_factor": demand_factor,
                    "outlier_pct": pct,
                    "correction_interval": tau,
                    "pct_revenue_change": pct_change,
                    "ci_low": pct_change - half,
                    "ci_high": pct_change + half,
                    "n_reps": n_reps,
                }
            )
    return rows
