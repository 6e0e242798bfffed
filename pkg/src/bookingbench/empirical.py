"""External booking-pattern ingestion, homogenisation, and residual detection.

Empirical patterns carry a departure day of week (0 = Sunday .. 6 = Saturday)
and a shortened-horizon marker.  Homogenisation regresses bookings on the six
weekday indicators (Sunday absorbed by the intercept) plus the
shortened-horizon indicator, independently at every interval (no smoothing
across intervals), and detection runs on the residual curves.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.stats import beta as beta_dist

from .detectors.functional import functional_detector
from .rng import rng_from

DAY_NAMES = ("sunday", "monday", "tuesday", "wednesday", "thursday", "friday", "saturday")
DESIGN_COLUMNS = ("intercept",) + DAY_NAMES[1:] + ("shortened_horizon",)

CSV_COLUMNS = (
    "pattern_id",
    "interval_index",
    "cumulative_bookings",
    "day_of_week",
    "shortened_horizon",
)


class IngestError(ValueError):
    """Raised for malformed empirical booking-pattern files."""


@dataclass(frozen=True)
class EmpiricalPattern:
    pattern_id: str
    day_of_week: int
    shortened_horizon: bool
    values: np.ndarray

    def __post_init__(self):
        if not 0 <= self.day_of_week <= 6:
            raise ValueError("day_of_week must lie in 0..6 (0 = Sunday)")
        if np.any(np.diff(self.values) < 0):
            raise ValueError(f"pattern {self.pattern_id!r} has decreasing cumulative bookings")


def ingest(path) -> list[EmpiricalPattern]:
    """Read and validate the empirical CSV schema.

    Rows must cover interval_index 1..T without gaps or duplicates for every
    pattern, all patterns sharing one T; cumulative bookings must be
    non-decreasing.  Violations raise IngestError naming the offending pattern
    or key.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in CSV_COLUMNS if c not in header]
        if missing:
            raise IngestError(f"missing columns: {', '.join(missing)}")
        rows: dict[str, dict[int, dict]] = {}
        meta: dict[str, tuple] = {}
        for line_no, row in enumerate(reader, start=2):
            try:
                pid = row["pattern_id"]
                idx = int(row["interval_index"])
                val = float(row["cumulative_bookings"])
                day = int(row["day_of_week"])
                short = row["shortened_horizon"].strip().lower() in ("1", "true", "yes")
            except (TypeError, ValueError) as exc:
                raise IngestError(f"line {line_no}: malformed row ({exc})") from exc
            per = rows.setdefault(pid, {})
            if idx in per:
                raise IngestError(f"duplicate (pattern_id, interval) key ({pid!r}, {idx})")
            per[idx] = val
            if pid in meta and meta[pid] != (day, short):
                raise IngestError(f"pattern {pid!r} has inconsistent day/horizon columns")
            meta[pid] = (day, short)
    if not rows:
        raise IngestError("no data rows")
    lengths = {len(per) for per in rows.values()}
    if len(lengths) != 1:
        raise IngestError(f"ragged pattern lengths: {sorted(lengths)}")
    t_len = lengths.pop()
    patterns = []
    for pid in sorted(rows):
        per = rows[pid]
        expected = set(range(1, t_len + 1))
        if set(per) != expected:
            raise IngestError(f"pattern {pid!r} does not cover intervals 1..{t_len}")
        values = np.array([per[i] for i in range(1, t_len + 1)])
        if np.any(np.diff(values) < 0):
            raise IngestError(f"pattern {pid!r} has decreasing cumulative bookings")
        day, short = meta[pid]
        try:
            patterns.append(EmpiricalPattern(pid, day, short, values))
        except ValueError as exc:
            raise IngestError(str(exc)) from exc
    return patterns


def design_matrix(patterns) -> np.ndarray:
    x = np.zeros((len(patterns), 8))
    x[:, 0] = 1.0
    for i, p in enumerate(patterns):
        if p.day_of_week > 0:
            x[i, p.day_of_week] = 1.0
        x[i, 7] = 1.0 if p.shortened_horizon else 0.0
    return x


def pointwise_regression(patterns) -> tuple[np.ndarray, np.ndarray]:
    """Interval-wise least squares of bookings on the weekday and
    shortened-horizon indicators.

    Returns the 8 x T coefficient matrix (rows ordered as DESIGN_COLUMNS) and
    the N x T residual matrix.  Indicator levels never observed drop out of
    the fit (their coefficients are zero); the intercept-only case therefore
    reduces to the pointwise mean.  The same design applies at every interval,
    so a single rank check suffices; a rank-deficient design names the first
    collinear column.
    """
    if not patterns:
        raise ValueError("no patterns")
    x = design_matrix(patterns)
    active = [0] + [c for c in range(1, x.shape[1]) if x[:, c].any()]
    xa = x[:, active]
    rank = np.linalg.matrix_rank(xa)
    if rank < xa.shape[1]:
        for pos in range(1, xa.shape[1]):
            reduced = np.delete(xa, pos, axis=1)
            if np.linalg.matrix_rank(reduced) == rank:
                raise ValueError(
                    f"design matrix rank deficient: column {DESIGN_COLUMNS[active[pos]]!r}"
                )
        raise ValueError("design matrix rank deficient")
    y = np.stack([p.values for p in patterns])
    beta_active, *_ = np.linalg.lstsq(xa, y, rcond=None)
    beta = np.zeros((x.shape[1], y.shape[1]))
    beta[active] = beta_active
    residuals = y - x @ beta
    return beta, residuals


def detect_empirical(patterns, seed, **detector_params) -> dict:
    """Homogenise then run the functional detector on the residual curves."""
    beta, residuals = pointwise_regression(patterns)
    result = functional_detector(residuals, rng_from(seed), **detector_params)
    if result.flags is None:
        raise ValueError("collection too small for the functional detector")
    flags = result.flags
    return {
        "flags": flags,
        "depths": -result.scores,
        "threshold": -result.threshold,
        "flagged_ids": [p.pattern_id for p, f in zip(patterns, flags) if f],
        "flagged_fraction": float(flags.mean()),
        "coefficients": beta,
        "residuals": residuals,
    }


# --- synthetic railway-like fixtures -----------------------------------------

def _base_curve(t: np.ndarray) -> np.ndarray:
    """Steep early rise, a flat middle, then a late surge."""
    return 0.55 * beta_dist.cdf(t, 1.4, 4.0) + 0.45 * beta_dist.cdf(t, 8.0, 1.6)


def make_fixture(
    n_patterns: int,
    seed,
    n_intervals: int = 18,
    outlier_fraction: float = 0.05,
    base_level: float = 120.0,
) -> tuple[list[EmpiricalPattern], np.ndarray]:
    """Generate synthetic booking patterns with weekday effects, shortened
    horizons, and volume-shifted outliers.  Returns the patterns and the
    ground-truth outlier mask (fixtures are for tests; real data carries no
    truth)."""
    rng = rng_from(seed)
    grid = np.linspace(0.0, 1.0, n_intervals + 1)
    base_shape = _base_curve(grid)
    day_mult = np.array([1.15, 0.9, 0.85, 0.9, 1.0, 1.25, 1.1])
    patterns = []
    truth = np.zeros(n_patterns, dtype=bool)
    for i in range(n_patterns):
        day = int(rng.integers(7))
        short = bool(rng.random() < 0.12)
        level = base_level * day_mult[day] * rng.normal(1.0, 0.05)
        shape = base_shape.copy()
        if short:
            start = 0.35
            warped = np.clip((grid - start) / (1.0 - start), 0.0, 1.0)
            shape = _base_curve(warped)
        is_outlier = rng.random() < outlier_fraction
        if is_outlier:
            level *= rng.choice([0.55, 1.6])
            truth[i] = True
        increments = rng.poisson(np.maximum(level * np.diff(shape), 0.0))
        values = np.cumsum(increments)
        patterns.append(
            EmpiricalPattern(
                pattern_id=f"fx{i:05d}",
                day_of_week=day,
                shortened_horizon=short,
                values=values.astype(float),
            )
        )
    return patterns, truth


def write_fixture_csv(patterns, path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for p in patterns:
            for idx, val in enumerate(p.values, start=1):
                writer.writerow(
                    [p.pattern_id, idx, f"{val:.10g}", p.day_of_week, int(p.shortened_horizon)]
                )
