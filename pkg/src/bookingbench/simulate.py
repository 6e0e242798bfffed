"""Booking-horizon simulation: apply nested controls to request streams.

A request with threshold class k books the cheapest open class j (largest j
with total sold < BL_j) exactly when j's fare does not exceed the threshold
fare, i.e. when k <= j.  Bookings are sampled cumulatively at the interval
boundaries t = 1/T, 2/T, ..., 1; a booking at exactly a boundary counts toward
that interval.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .controls import BookingControls, recompute_midhorizon
from .demand import RequestStream, sample_requests
from .forecast import ForecastSet
from .rng import rng_from
from .scenario import (
    BookingPattern,
    DemandScenario,
    FareStructure,
    REGULAR_LABEL,
    ScenarioLabel,
)
from ._parallel import parallel_map


def _open_count_by_sold(limits, capacity: int) -> list[int]:
    """open[s] = number of open classes when s seats are sold (classes are
    nested, so the open set is always a prefix of the ladder)."""
    asc = np.sort(np.asarray(limits))
    sold = np.arange(capacity + 1)
    return (len(limits) - np.searchsorted(asc, sold, side="right")).tolist()


def _interval_index(times: np.ndarray, n_intervals: int) -> np.ndarray:
    idx = np.ceil(times * n_intervals).astype(np.int64)
    return np.clip(idx, 1, n_intervals)


def run_horizon(
    stream: RequestStream,
    controls: BookingControls,
    fare_structure: FareStructure,
    n_intervals: int,
    truth: ScenarioLabel = REGULAR_LABEL,
    scenario_id: str = "",
) -> BookingPattern:
    """Process one request stream under fixed nested controls."""
    if controls.n_classes != fare_structure.n_classes:
        raise ValueError("controls and fare structure disagree on class count")
    sold, booked_iv, booked_cls = _sell_phase(
        stream.wtp.tolist(),
        _interval_index(stream.times, n_intervals).tolist(),
        _open_count_by_sold(controls.limits, fare_structure.capacity),
        0,
    )
    return _assemble_pattern(
        booked_iv, booked_cls, fare_structure, n_intervals, truth, scenario_id
    )


def _sell_phase(wtp: list, intervals: list, open_by_sold: list, sold0: int):
    """Sequential accept/reject loop; returns sold count and booked requests."""
    sold = sold0
    booked_iv: list[int] = []
    booked_cls: list[int] = []
    for k, iv in zip(wtp, intervals):
        if k < 0:
            continue
        n_open = open_by_sold[sold]
        if k < n_open:
            booked_iv.append(iv)
            booked_cls.append(n_open - 1)
            sold += 1
    return sold, booked_iv, booked_cls


def _assemble_pattern(booked_iv, booked_cls, fare_structure, n_intervals, truth, scenario_id):
    n_classes = fare_structure.n_classes
    counts = np.zeros((n_intervals, n_classes), dtype=np.int64)
    if booked_iv:
        np.add.at(counts, (np.asarray(booked_iv) - 1, np.asarray(booked_cls)), 1)
    per_class_cum = counts.cumsum(axis=0)
    revenue_cum = (counts @ np.asarray(fare_structure.fares)).cumsum()
    return BookingPattern(
        per_class_cumulative=per_class_cum,
        total_cumulative=per_class_cum.sum(axis=1),
        revenue_cumulative=revenue_cum,
        truth=truth,
        scenario_id=scenario_id,
    )


def run_horizon_with_correction(
    stream: RequestStream,
    controls: BookingControls,
    corrected_forecast: ForecastSet,
    scenario: DemandScenario,
    correction_interval: int,
    truth: ScenarioLabel = REGULAR_LABEL,
    scenario_id: str = "",
) -> BookingPattern:
    """Run under ``controls`` until boundary ``correction_interval``/T, then
    re-optimise from the corrected forecast for the remaining seats.

    ``correction_interval`` = 0 applies corrected controls from the start;
    T (or more) never switches.
    """
    fs = scenario.fare_structure
    n_intervals = scenario.n_intervals
    t_switch = correction_interval / n_intervals
    iv = _interval_index(stream.times, n_intervals)
    before = stream.times <= t_switch

    wtp_list = stream.wtp.tolist()
    iv_list = iv.tolist()
    n_before = int(before.sum())
    sold, booked_iv, booked_cls = _sell_phase(
        wtp_list[:n_before],
        iv_list[:n_before],
        _open_count_by_sold(controls.limits, fs.capacity),
        0,
    )
    if correction_interval < n_intervals:
        new_controls = recompute_midhorizon(
            controls, corrected_forecast, scenario, sold, t_switch
        )
        sold2, iv2, cls2 = _sell_phase(
            wtp_list[n_before:],
            iv_list[n_before:],
            _open_count_by_sold(new_controls.limits, fs.capacity - sold),
            0,
        )
        booked_iv += iv2
        booked_cls += cls2
    return _assemble_pattern(booked_iv, booked_cls, fs, n_intervals, truth, scenario_id)


@dataclass(frozen=True)
class PatternCollection:
    """A benchmark set of booking patterns with ground-truth labels."""

    patterns: tuple[BookingPattern, ...]

    def __len__(self) -> int:
        return len(self.patterns)

    @property
    def n_intervals(self) -> int:
        return self.patterns[0].n_intervals

    def matrix(self) -> np.ndarray:
        """N x T cumulative-bookings matrix."""
        return np.stack([p.total_cumulative for p in self.patterns])

    def truth(self) -> np.ndarray:
        return np.array([p.truth.outlier for p in self.patterns])

    def kinds(self) -> list[str]:
        return [p.truth.kind for p in self.patterns]

    def ids(self) -> list[str]:
        return [p.scenario_id for p in self.patterns]


def _one_collection_pattern(args) -> BookingPattern:
    i, base, outliers, frequency, controls, seed = args
    rng = rng_from(seed, i)
    scenario = base
    if outliers and rng.random() < frequency:
        scenario = outliers[int(rng.integers(len(outliers)))]
    stream = sample_requests(scenario, rng)
    return run_horizon(
        stream,
        controls,
        scenario.fare_structure,
        scenario.n_intervals,
        truth=scenario.label,
        scenario_id=f"p{i:05d}",
    )


def build_collection(
    n_patterns: int,
    outlier_frequency: float,
    outlier_scenarios,
    base: DemandScenario,
    controls: BookingControls,
    seed,
    workers: int = 1,
) -> PatternCollection:
    """Generate a labelled benchmark collection under shared controls.

    Each pattern is independently an outlier with probability
    ``outlier_frequency`` (kind drawn uniformly from ``outlier_scenarios``);
    the realised count is whatever the labels say.  Pattern i derives its
    randomness from child seed (seed, i), so results are identical for any
    worker count.
    """
    if not 0.0 <= outlier_frequency <= 1.0:
        raise ValueError("outlier frequency must lie in [0, 1]")
    outliers = tuple(outlier_scenarios)
    if outlier_frequency > 0 and not outliers:
        raise ValueError("outlier kinds required when the frequency is nonzero")
    jobs = [(i, base, outliers, outlier_frequency, controls, seed) for i in range(n_patterns)]
    return PatternCollection(tuple(parallel_map(_one_collection_pattern, jobs, workers)))


def _one_revenue_rep(args):
    rep, scenario, policies, seed, fd_index = args
    stream = sample_requests(scenario, rng_from(seed, fd_index, rep))
    fs = scenario.fare_structure
    return [
        run_horizon(stream, controls, fs, scenario.n_intervals).final_revenue
        for controls in policies
    ]


def revenue_comparison(
    scenarios_by_factor: dict,
    controls_by_factor: dict,
    n_reps: int,
    seed,
    workers: int = 1,
) -> list[dict]:
    """Mean revenue per (demand factor, policy) plus ratios against FCFS.

    ``scenarios_by_factor`` maps demand factor -> scenario;
    ``controls_by_factor`` maps demand factor -> {policy_name: controls}.
    All policies for a factor face the same streams (common random numbers).
    """
    rows = []
    for fd_index, (factor, scenario) in enumerate(sorted(scenarios_by_factor.items())):
        policy_names = list(controls_by_factor[factor])
        policies = [controls_by_factor[factor][name] for name in policy_names]
        jobs = [(rep, scenario, policies, seed, fd_index) for rep in range(n_reps)]
        revenue = np.asarray(parallel_map(_one_revenue_rep, jobs, workers))
        means = revenue.mean(axis=0)
        fcfs_mean = None
        for name, mean in zip(policy_names, means):
            if name == "fcfs":
                fcfs_mean = mean
        for name, mean in zip(policy_names, means):
            rows.append(
                {
                    "demand_factor": factor,
                    "policy": name,
                    "mean_revenue": float(mean),
                    "ratio_vs_fcfs": float(mean / fcfs_mean) if fcfs_mean else float("nan"),
                    "n_reps": n_reps,
                }
            )
    return rows
