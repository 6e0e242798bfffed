"""Monte-Carlo class-demand forecasts feeding the booking-limit heuristics.

Forecast runs observe choices with the full fare ladder available so that
class-level demand is uncensored: each request is counted against its
willingness-to-pay threshold class.  The ``lowest_open_sweep`` policy instead
records, for every class j, the bookings that would occur if j were the
cheapest open class (everyone with a threshold at or above j's fare books j),
which directly estimates the cumulative demand curve used by the marginal
revenue transformation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .demand import make_volume_outlier, sample_requests
from .rng import rng_from
from .scenario import DemandScenario, relabel, REGULAR_LABEL

AVAILABILITY_POLICIES = ("all_open", "lowest_open_sweep")


@dataclass(frozen=True)
class ForecastSet:
    """Per-class demand mean and variance with standard-error diagnostics."""

    mu: np.ndarray
    var: np.ndarray
    n_runs: int

    def __post_init__(self):
        if np.any(self.var < 0):
            raise ValueError("variances must be non-negative")

    @property
    def se_mu(self) -> np.ndarray:
        return np.sqrt(self.var / self.n_runs)

    @property
    def se_var(self) -> np.ndarray:
        return self.var * math.sqrt(2.0 / (self.n_runs - 1))


def forecast_demand(
    scenario: DemandScenario,
    n_runs: int,
    seed,
    availability: str = "all_open",
) -> ForecastSet:
    """Estimate per-class final demand from ``n_runs`` uncontrolled horizons.

    Returns the sample mean and unbiased sample variance of the per-class
    booked counts at departure.  Run r uses the child stream (seed, r), so the
    result does not depend on execution order.
    """
    if n_runs < 2:
        raise ValueError("need at least 2 forecast runs")
    if availability not in AVAILABILITY_POLICIES:
        raise ValueError(f"unknown availability policy {availability!r}")
    n_classes = scenario.n_classes
    counts = np.zeros((n_runs, n_classes))
    for r in range(n_runs):
        stream = sample_requests(scenario, rng_from(seed, r))
        buying = stream.wtp[stream.wtp >= 0]
        per_class = np.bincount(buying, minlength=n_classes)
        if availability == "all_open":
            counts[r] = per_class
        else:
            counts[r] = np.cumsum(per_class)
    mu = counts.mean(axis=0)
    var = counts.var(axis=0, ddof=1)
    return ForecastSet(mu=mu, var=var, n_runs=n_runs)


def scenario_for_demand_factor(base: DemandScenario, demand_factor: float) -> DemandScenario:
    """Volume-scale ``base`` so mean total arrivals equal demand_factor * C.

    The result is still labelled regular; it is a sweep baseline, not an
    outlier.
    """
    if demand_factor <= 0:
        raise ValueError("demand factor must be positive")
    mean = base.gamma_shape / base.gamma_rate
    target = demand_factor * base.fare_structure.capacity
    pct = target / mean - 1.0
    return relabel(make_volume_outlier(base, pct), REGULAR_LABEL)
