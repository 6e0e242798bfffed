"""Domain types: fare structures, customer segments, demand scenarios, patterns.

All types are immutable value objects and safe to share across workers.  The
demand model: total arrivals are Gamma(shape, rate) distributed, split across
customer segments by mix shares, with segment arrival times following a Beta
density over the unit booking horizon and a willingness-to-pay threshold drawn
per request.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

PROB_TOL = 1e-9


@dataclass(frozen=True)
class ScenarioLabel:
    """Ground-truth tag carried from a scenario onto the patterns it generates."""

    outlier: bool = False
    kind: str = ""

    def as_str(self) -> str:
        return f"outlier:{self.kind}" if self.outlier else "regular"

    @staticmethod
    def parse(text: str) -> "ScenarioLabel":
        if text == "regular":
            return REGULAR_LABEL
        if text.startswith("outlier:"):
            return ScenarioLabel(True, text.split(":", 1)[1])
        raise ValueError(f"unrecognised label {text!r}")


REGULAR_LABEL = ScenarioLabel(False, "")


@dataclass(frozen=True)
class FareStructure:
    """Fare classes ordered most expensive first, plus seat capacity."""

    labels: tuple[str, ...]
    fares: tuple[float, ...]
    capacity: int

    def __post_init__(self):
        if len(self.labels) != len(self.fares):
            raise ValueError("labels and fares must have equal length")
        if len(self.fares) < 2:
            raise ValueError("at least 2 fare classes required")
        if any(a < b for a, b in zip(self.fares, self.fares[1:])):
            raise ValueError("fares must be non-increasing from class 1 down")
        if not self.fares[0] > self.fares[-1]:
            raise ValueError("top fare must strictly exceed bottom fare")
        if self.capacity <= 0:
            raise ValueError("capacity must be positive")

    @property
    def n_classes(self) -> int:
        return len(self.fares)


@dataclass(frozen=True)
class CustomerSegment:
    """One customer type: arrival-time Beta parameters, mix share, and the
    willingness-to-pay distribution over fare-class thresholds.

    ``wtp[k]`` is the probability that a request's threshold is class ``k+1``
    (the most expensive class it accepts); ``no_buy`` is the probability that
    the customer books nothing regardless of availability.
    """

    beta_a: float
    beta_b: float
    mix_share: float
    wtp: tuple[float, ...]
    no_buy: float

    def __post_init__(self):
        if self.beta_a <= 0 or self.beta_b <= 0:
            raise ValueError("Beta parameters must be positive")
        if not 0.0 <= self.mix_share <= 1.0:
            raise ValueError("mix share must lie in [0, 1]")
        probs = (*self.wtp, self.no_buy)
        if any(p < -PROB_TOL or p > 1 + PROB_TOL for p in probs):
            raise ValueError("probabilities must lie in [0, 1]")
        if abs(sum(probs) - 1.0) > PROB_TOL:
            raise ValueError(f"wtp probabilities plus no_buy must sum to 1, got {sum(probs)!r}")

    def arrival_mode(self) -> float | None:
        """Mode of the Beta arrival density; None when not unimodal."""
        denom = self.beta_a + self.beta_b - 2.0
        if denom <= 0:
            return None
        return (self.beta_a - 1.0) / denom


@dataclass(frozen=True)
class DemandScenario:
    """Full parameterisation of one demand regime."""

    gamma_shape: float
    gamma_rate: float
    segments: tuple[CustomerSegment, ...]
    fare_structure: FareStructure
    n_intervals: int = 30
    label: ScenarioLabel = REGULAR_LABEL

    def __post_init__(self):
        if self.gamma_shape <= 0 or self.gamma_rate <= 0:
            raise ValueError("Gamma parameters must be positive")
        if self.n_intervals < 2:
            raise ValueError("need at least 2 booking intervals")
        if not self.segments:
            raise ValueError("at least one customer segment required")
        total = sum(s.mix_share for s in self.segments)
        if abs(total - 1.0) > PROB_TOL:
            raise ValueError(f"mix shares must sum to 1, got {total!r}")
        n = self.fare_structure.n_classes
        for s in self.segments:
            if len(s.wtp) != n:
                raise ValueError("segment wtp vector length must match fare classes")
        if not self.label.outlier and len(self.segments) >= 2:
            modes = [s.arrival_mode() for s in self.segments[:2]]
            if None not in modes and not modes[0] > modes[1]:
                raise ValueError(
                    "regular scenario must have high-value requests arriving later "
                    f"(segment arrival modes {modes[0]:.3f} vs {modes[1]:.3f})"
                )

    @property
    def n_classes(self) -> int:
        return self.fare_structure.n_classes

    def mean_wtp(self) -> np.ndarray:
        """Mix-weighted threshold probabilities per class (length n_classes)."""
        out = np.zeros(self.n_classes)
        for s in self.segments:
            out += s.mix_share * np.asarray(s.wtp)
        return out


def demand_moments(scenario: DemandScenario) -> tuple[float, float]:
    """Mean and standard deviation of total arrivals under the shape/rate Gamma."""
    mean = scenario.gamma_shape / scenario.gamma_rate
    sd = math.sqrt(scenario.gamma_shape) / scenario.gamma_rate
    return mean, sd


def default_regular_scenario(n_intervals: int = 30) -> DemandScenario:
    """Two-segment regular demand: mean 240 arrivals, seven fare classes, C=200.

    Segment 1 (high value) arrives late, Beta(5, 2); segment 2 (low value)
    arrives early, Beta(2, 5).  The horizon length defaults to 30 equally
    spaced intervals and is configurable.
    """
    fares = FareStructure(
        labels=("A", "O", "J", "P", "R", "S", "M"),
        fares=(400.0, 300.0, 280.0, 240.0, 200.0, 185.0, 175.0),
        capacity=200,
    )
    business = CustomerSegment(
        beta_a=5.0,
        beta_b=2.0,
        mix_share=0.5,
        wtp=(0.35, 0.1, 0.25, 0.15, 0.05, 0.0, 0.0),
        no_buy=0.10,
    )
    tourist = CustomerSegment(
        beta_a=2.0,
        beta_b=5.0,
        mix_share=0.5,
        wtp=(0.05, 0.1, 0.0, 0.05, 0.1, 0.15, 0.5),
        no_buy=0.05,
    )
    return DemandScenario(
        gamma_shape=240.0,
        gamma_rate=1.0,
        segments=(business, tourist),
        fare_structure=fares,
        n_intervals=n_intervals,
    )


@dataclass
class BookingPattern:
    """One horizon's bookings sampled at the interval boundaries.

    ``per_class_cumulative`` has shape (T, n_classes); row t holds cumulative
    bookings per class up to boundary t.  ``total_cumulative`` and
    ``revenue_cumulative`` are the row sums and cumulative revenue.
    """

    per_class_cumulative: np.ndarray
    total_cumulative: np.ndarray
    revenue_cumulative: np.ndarray
    truth: ScenarioLabel = REGULAR_LABEL
    scenario_id: str = ""

    def __post_init__(self):
        total = self.total_cumulative
        if np.any(np.diff(total) < 0):
            raise ValueError("cumulative bookings must be non-decreasing")
        if not np.array_equal(self.per_class_cumulative.sum(axis=1), total):
            raise ValueError("per-class cumulative rows must sum to the total")

    @property
    def n_intervals(self) -> int:
        return len(self.total_cumulative)

    @property
    def final_bookings(self) -> int:
        return int(self.total_cumulative[-1])

    @property
    def final_revenue(self) -> float:
        return float(self.revenue_cumulative[-1])


# --- scenario (de)serialisation: plain JSON documents -----------------------

def scenario_to_dict(s: DemandScenario) -> dict:
    return {
        "gamma_shape": s.gamma_shape,
        "gamma_rate": s.gamma_rate,
        "n_intervals": s.n_intervals,
        "label": s.label.as_str(),
        "fare_structure": {
            "labels": list(s.fare_structure.labels),
            "fares": list(s.fare_structure.fares),
            "capacity": s.fare_structure.capacity,
        },
        "segments": [
            {
                "beta_a": seg.beta_a,
                "beta_b": seg.beta_b,
                "mix_share": seg.mix_share,
                "wtp": list(seg.wtp),
                "no_buy": seg.no_buy,
            }
            for seg in s.segments
        ],
    }


def scenario_from_dict(doc: dict) -> DemandScenario:
    try:
        fs = doc["fare_structure"]
        fare_structure = FareStructure(
            labels=tuple(fs["labels"]), fares=tuple(fs["fares"]), capacity=int(fs["capacity"])
        )
        segments = tuple(
            CustomerSegment(
                beta_a=float(seg["beta_a"]),
                beta_b=float(seg["beta_b"]),
                mix_share=float(seg["mix_share"]),
                wtp=tuple(float(p) for p in seg["wtp"]),
                no_buy=float(seg["no_buy"]),
            )
            for seg in doc["segments"]
        )
        return DemandScenario(
            gamma_shape=float(doc["gamma_shape"]),
            gamma_rate=float(doc["gamma_rate"]),
            segments=segments,
            fare_structure=fare_structure,
            n_intervals=int(doc["n_intervals"]),
            label=ScenarioLabel.parse(doc.get("label", "regular")),
        )
    except KeyError as exc:
        raise KeyError(f"missing scenario key: {exc.args[0]}") from exc


def save_scenario(s: DemandScenario, path: "str | Path") -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(s), indent=2) + "\n")


def load_scenario(path: "str | Path") -> DemandScenario:
    return scenario_from_dict(json.loads(Path(path).read_text()))


def relabel(s: DemandScenario, label: ScenarioLabel) -> DemandScenario:
    return replace(s, label=label)
