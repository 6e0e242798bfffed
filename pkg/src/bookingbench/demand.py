"""Request-stream sampling and outlier scenario construction.

Sampling uses count-then-times: total arrivals d are drawn once per horizon
from Gamma(shape, rate); each segment draws a Poisson(d * share) request count
whose arrival times are i.i.d. Beta(a, b).  This is distributionally identical
to thinning the non-homogeneous intensity d * share * beta_pdf(t) and much
cheaper to verify.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .rng import rng_from
from .scenario import DemandScenario, ScenarioLabel

NO_BUY = -1

ARRIVAL_OUTLIER_SETTINGS = {
    1: (5.0, 2.0, 5.0, 2.0),
    2: (2.0, 5.0, 2.0, 5.0),
    3: (5.0, 2.0, 2.0, 2.0),
    4: (2.0, 2.0, 2.0, 5.0),
}


@dataclass(frozen=True)
class RequestStream:
    """Time-ordered customer requests for one booking horizon.

    ``wtp`` holds 0-based threshold class indices; ``NO_BUY`` marks requests
    that never book.
    """

    times: np.ndarray
    segments: np.ndarray
    wtp: np.ndarray

    def __post_init__(self):
        if not (len(self.times) == len(self.segments) == len(self.wtp)):
            raise ValueError("stream arrays must have equal length")
        if np.any(np.diff(self.times) < 0):
            raise ValueError("request times must be sorted non-decreasing")

    def __len__(self) -> int:
        return len(self.times)


def sample_requests(scenario: DemandScenario, seed) -> RequestStream:
    """Draw one horizon's request stream.

    Draw order is fixed (total demand, then per segment: count, times,
    thresholds) so a given seed always yields the same stream.
    """
    rng = rng_from(seed)
    d = rng.gamma(scenario.gamma_shape, 1.0 / scenario.gamma_rate)
    times_parts, seg_parts, wtp_parts = [], [], []
    for i, seg in enumerate(scenario.segments):
        n_i = rng.poisson(d * seg.mix_share)
        t_i = rng.beta(seg.beta_a, seg.beta_b, size=n_i)
        cum = np.cumsum(np.asarray((*seg.wtp, seg.no_buy)))
        cum[-1] = 1.0
        draws = np.searchsorted(cum, rng.random(n_i), side="right")
        wtp_i = np.where(draws >= scenario.n_classes, NO_BUY, draws)
        times_parts.append(t_i)
        seg_parts.append(np.full(n_i, i, dtype=np.int64))
        wtp_parts.append(wtp_i.astype(np.int64))
    times = np.concatenate(times_parts) if times_parts else np.empty(0)
    order = np.argsort(times, kind="stable")
    return RequestStream(
        times=times[order],
        segments=np.concatenate(seg_parts)[order],
        wtp=np.concatenate(wtp_parts)[order],
    )


def make_volume_outlier(base: DemandScenario, pct: float) -> DemandScenario:
    """Scale mean total demand by (1 + pct) while preserving its standard
    deviation: shape * (1+pct)^2, rate * (1+pct)."""
    if pct <= -1.0:
        raise ValueError("pct must exceed -1")
    if pct == 0.0:
        return base
    factor = 1.0 + pct
    return replace(
        base,
        gamma_shape=base.gamma_shape * factor * factor,
        gamma_rate=base.gamma_rate * factor,
        label=ScenarioLabel(True, f"volume{pct:+g}"),
    )


def make_wtp_outlier(base: DemandScenario, new_shares) -> DemandScenario:
    """Shift the proportions of demand across segments (and hence across fare
    classes).  Per-class probability edits are done by constructing a scenario
    directly."""
    shares = tuple(float(x) for x in new_shares)
    if len(shares) != len(base.segments):
        raise ValueError("one share per segment required")
    if abs(sum(shares) - 1.0) > 1e-9:
        raise ValueError("shares must sum to 1")
    if shares == tuple(s.mix_share for s in base.segments):
        return base
    segments = tuple(replace(s, mix_share=phi) for s, phi in zip(base.segments, shares))
    kind = "wtp" + ",".join(f"{phi:g}" for phi in shares)
    return replace(base, segments=segments, label=ScenarioLabel(True, kind))


def make_arrival_outlier(base: DemandScenario, setting: int) -> DemandScenario:
    """Replace the Beta arrival parameters of both segments with one of the
    four benchmark settings (1: low-value much later ... 4: high-value a
    little earlier)."""
    if setting not in ARRIVAL_OUTLIER_SETTINGS:
        raise ValueError(f"unknown arrival outlier setting {setting}; valid: 1..4")
    if len(base.segments) < 2:
        raise ValueError("arrival outlier settings assume two segments")
    a1, b1, a2, b2 = ARRIVAL_OUTLIER_SETTINGS[setting]
    segments = (
        replace(base.segments[0], beta_a=a1, beta_b=b1),
        replace(base.segments[1], beta_a=a2, beta_b=b2),
        *base.segments[2:],
    )
    return replace(base, segments=segments, label=ScenarioLabel(True, f"arrival{setting}"))


def parse_outlier_spec(base: DemandScenario, spec: dict) -> DemandScenario:
    """Build an outlier scenario from a config mapping.

    Supported forms: {"type": "volume", "pct": -0.25},
    {"type": "wtp", "shares": [0.3, 0.7]}, {"type": "arrival", "setting": 3}.
    """
    kind = spec.get("type")
    if kind == "volume":
        return make_volume_outlier(base, float(spec["pct"]))
    if kind == "wtp":
        return make_wtp_outlier(base, spec["shares"])
    if kind == "arrival":
        return make_arrival_outlier(base, int(spec["setting"]))
    raise ValueError(f"unknown outlier type {kind!r}; valid: volume, wtp, arrival")
