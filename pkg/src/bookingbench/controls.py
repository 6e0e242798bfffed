"""Nested booking limits: EMSRb, EMSRb-MR, and the FCFS baseline.

EMSRb protects classes 1..j against class j+1 at level

    PL_j = mu + PhiInv(1 - r_{j+1} / rbar_j) * sigma,

where mu, sigma aggregate the demand of classes 1..j and rbar_j is their
demand-weighted average fare.  PL_|J| = C.  Booking limits follow as
BL_1 = C, BL_j = C - PL_{j-1}; protection levels are rounded to whole seats,
clamped to [0, C] and made non-decreasing so the nested structure holds.

Boundary handling (the formula's argument can leave (0, 1), and the marginal
revenue transformation can produce negative adjusted fares):

* argument <= 0: protect nothing at this boundary (raw level 0);
* argument >= 1 with a non-negative next fare: protect everything (raw C);
* a negative next fare enters through its magnitude, and a class whose own
  adjusted fare is non-positive adds no boundary of its own (its protection
  level carries forward).  Opening a revenue-destroying class can justify at
  most the protection its magnitude implies; this convention also reproduces
  published nested-limit tables for demand curves with a non-monotone
  marginal-revenue profile.
* a boundary looks at the next class with positive demand; a class expected
  to sell nothing opens together with the first class below it that does,
  and when no demand remains below, the boundary protects everything.
* zero aggregate demand at a boundary carries the previous level forward.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .forecast import ForecastSet
from .scenario import DemandScenario, FareStructure

EMSRB = "emsrb"
EMSRB_MR = "emsrb_mr"
FCFS = "fcfs"
HEURISTICS = (EMSRB, EMSRB_MR, FCFS)


@dataclass(frozen=True)
class BookingControls:
    """Nested limits per fare class; limits[0] always equals capacity."""

    heuristic: str
    limits: tuple[int, ...]
    protection: tuple[int, ...]

    def __post_init__(self):
        if any(a > b for a, b in zip(self.protection, self.protection[1:])):
            raise ValueError("protection levels must be non-decreasing")
        if any(a < b for a, b in zip(self.limits, self.limits[1:])):
            raise ValueError("booking limits must be non-increasing")
        if any(bl < 0 for bl in self.limits):
            raise ValueError("booking limits must be non-negative")

    @property
    def capacity(self) -> int:
        return self.limits[0]

    @property
    def n_classes(self) -> int:
        return len(self.limits)


def _emsrb_core(mu, var, fares, capacity: int, heuristic: str) -> BookingControls:
    mu = np.asarray(mu, dtype=float)
    var = np.asarray(var, dtype=float)
    fares = np.asarray(fares, dtype=float)
    n = len(mu)
    if not (len(var) == len(fares) == n):
        raise ValueError("mu, var and fares must have equal length")
    if np.any(var < 0):
        raise ValueError("variances must be non-negative")
    if capacity <= 0:
        raise ValueError("capacity must be positive")

    protection = np.empty(n, dtype=int)
    prev = 0
    agg_mu = 0.0
    agg_var = 0.0
    agg_rev = 0.0
    for j in range(n - 1):
        agg_mu += mu[j]
        agg_var += var[j]
        agg_rev += fares[j] * mu[j]
        nxt = next((k for k in range(j + 1, n) if mu[k] > 0.0), None)
        if agg_mu <= 0.0 or agg_rev <= 0.0 or fares[j] <= 0.0:
            raw = prev
        elif nxt is None:
            # no demand left below: opening cheaper classes only dilutes
            raw = capacity
        else:
            rbar = agg_rev / agg_mu
            p = 1.0 - abs(fares[nxt]) / rbar
            if p <= 0.0:
                raw = 0
            elif p >= 1.0:
                raw = capacity
            else:
                level = agg_mu + norm.ppf(p) * math.sqrt(agg_var)
                raw = int(math.floor(level + 0.5))
        prev = min(max(raw, prev), capacity)
        protection[j] = prev
    protection[n - 1] = capacity

    limits = np.empty(n, dtype=int)
    limits[0] = capacity
    limits[1:] = capacity - protection[: n - 1]
    return BookingControls(
        heuristic=heuristic,
        limits=tuple(int(x) for x in limits),
        protection=tuple(int(x) for x in protection),
    )


def emsrb(mu, var, fares, capacity: int) -> BookingControls:
    """EMSRb nested limits from independent Gaussian class demands."""
    fares = np.asarray(fares, dtype=float)
    if np.any(np.diff(fares) > 0):
        raise ValueError("fares must be non-increasing (most expensive first)")
    return _emsrb_core(mu, var, fares, capacity, EMSRB)


def marginal_revenue_transform(mu_cum, fares) -> tuple[np.ndarray, np.ndarray]:
    """Adjusted demand increments and marginal fares from the cumulative
    lowest-open-class demand curve.

    With mu_0 = 0, r_0 = 0: adj_mu_j = mu_j - mu_{j-1} and
    adj_fare_j = (r_j mu_j - r_{j-1} mu_{j-1}) / (mu_j - mu_{j-1}).
    A zero increment leaves the marginal fare undefined; the adjusted demand
    is emitted as 0 and the previous adjusted fare propagated.
    """
    mu_cum = np.asarray(mu_cum, dtype=float)
    fares = np.asarray(fares, dtype=float)
    if len(mu_cum) != len(fares):
        raise ValueError("mu_cum and fares must have equal length")
    if np.any(np.diff(mu_cum) < 0):
        raise ValueError("cumulative demand must be non-decreasing")
    if not mu_cum[0] > 0:
        raise ValueError("top-class demand must be positive")

    adj_mu = np.diff(mu_cum, prepend=0.0)
    revenue = fares * mu_cum
    adj_fares = np.empty_like(fares)
    adj_fares[0] = fares[0]
    for j in range(1, len(fares)):
        if adj_mu[j] <= 0.0:
            adj_mu[j] = 0.0
            adj_fares[j] = adj_fares[j - 1]
        else:
            adj_fares[j] = (revenue[j] - revenue[j - 1]) / adj_mu[j]
    return adj_mu, adj_fares


def emsrb_mr(mu, var, fares, capacity: int) -> BookingControls:
    """EMSRb applied after the marginal revenue transformation.

    ``mu``/``var`` are the per-class (threshold) forecasts; the cumulative
    lowest-open-class demand curve is their running sum, and the per-class
    variances are kept for the adjusted increments.
    """
    fares = np.asarray(fares, dtype=float)
    if np.any(np.diff(fares) > 0):
        raise ValueError("fares must be non-increasing (most expensive first)")
    mu_cum = np.cumsum(np.asarray(mu, dtype=float))
    adj_mu, adj_fares = marginal_revenue_transform(mu_cum, fares)
    return _emsrb_core(adj_mu, var, adj_fares, capacity, EMSRB_MR)


def fcfs_controls(fare_structure: FareStructure) -> BookingControls:
    """Accept every affordable request at the cheapest class until capacity."""
    n = fare_structure.n_classes
    c = fare_structure.capacity
    return BookingControls(
        heuristic=FCFS,
        limits=(c,) * n,
        protection=(0,) * (n - 1) + (c,),
    )


def compute_controls(
    forecast: ForecastSet, fare_structure: FareStructure, heuristic: str
) -> BookingControls:
    """Dispatch on heuristic name; FCFS ignores the forecast."""
    if heuristic == EMSRB:
        return emsrb(forecast.mu, forecast.var, fare_structure.fares, fare_structure.capacity)
    if heuristic == EMSRB_MR:
        return emsrb_mr(forecast.mu, forecast.var, fare_structure.fares, fare_structure.capacity)
    if heuristic == FCFS:
        return fcfs_controls(fare_structure)
    raise ValueError(f"unknown heuristic {heuristic!r}; valid: {', '.join(HEURISTICS)}")


def arrived_fractions(scenario: DemandScenario, elapsed: float) -> np.ndarray:
    """Per-class fraction of final demand already arrived by ``elapsed``.

    Class j's demand mixes the segments in proportion share_i * wtp_ij, so its
    arrived fraction is the corresponding mixture of Beta CDFs.
    """
    from scipy.stats import beta as beta_dist

    elapsed = float(np.clip(elapsed, 0.0, 1.0))
    weights = np.array([[s.mix_share * p for p in s.wtp] for s in scenario.segments])
    cdfs = np.array(
        [beta_dist.cdf(elapsed, s.beta_a, s.beta_b) for s in scenario.segments]
    )
    total = weights.sum(axis=0)
    arrived = (weights * cdfs[:, None]).sum(axis=0)
    out = np.full(scenario.n_classes, elapsed)
    nz = total > 0
    out[nz] = arrived[nz] / total[nz]
    return out


def recompute_midhorizon(
    controls: BookingControls,
    corrected: ForecastSet,
    scenario: DemandScenario,
    sold: int,
    elapsed: float,
) -> BookingControls:
    """Re-run the heuristic for the remainder of the horizon.

    Remaining capacity is C - sold; remaining per-class demand scales the
    corrected forecast means by the not-yet-arrived fraction of each class's
    Beta mixture (variances scale by the same factor, Poisson-style).  The
    returned limits apply to sales made after the recompute.
    """
    c = scenario.fare_structure.capacity
    if not 0 <= sold <= c:
        raise ValueError("sold must lie in [0, capacity]")
    if not 0.0 <= elapsed <= 1.0:
        raise ValueError("elapsed must lie in [0, 1]")
    remaining_cap = c - sold
    n = scenario.n_classes
    if remaining_cap == 0:
        return BookingControls(
            heuristic=controls.heuristic,
            limits=(0,) * n,
            protection=(0,) * (n - 1) + (0,),
        )
    frac_left = 1.0 - arrived_fractions(scenario, elapsed)
    mu = corrected.mu * frac_left
    var = corrected.var * frac_left
    if mu.sum() <= 0.0:
        # nothing left to protect for: open every class on the remaining seats
        return BookingControls(
            heuristic=controls.heuristic,
            limits=(remaining_cap,) * n,
            protection=(0,) * (n - 1) + (remaining_cap,),
        )
    rest = ForecastSet(mu=mu, var=var, n_runs=corrected.n_runs)
    fs = FareStructure(
        labels=scenario.fare_structure.labels,
        fares=scenario.fare_structure.fares,
        capacity=remaining_cap,
    )
    return compute_controls(rest, fs, controls.heuristic)
