"""CSV artefacts and run manifests.

Outputs are plain CSV with a fixed column order and "%.10g" float formatting,
so identical inputs produce byte-identical files.  Every CLI run also writes
``manifest.json`` recording the seed, the configuration hash and library
versions; manifests contain nothing volatile.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path

import numpy as np

from . import __version__
from .controls import BookingControls
from .detectors.base import DetectionRun
from .forecast import ForecastSet
from .scenario import BookingPattern, FareStructure, ScenarioLabel
from .simulate import PatternCollection

PATTERN_COLUMNS = ("pattern_id", "interval_index", "cumulative_bookings", "truth_label", "kind")


def _fmt(x) -> str:
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return f"{x:.10g}"
    return str(x)


def write_simple_csv(path, header, rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


_write_rows = write_simple_csv


def write_patterns_csv(collection: PatternCollection, path) -> None:
    def rows():
        for p in collection.patterns:
            label = "outlier" if p.truth.outlier else "regular"
            for idx, val in enumerate(p.total_cumulative, start=1):
                yield (p.scenario_id, idx, int(val), label, p.truth.kind)

    _write_rows(path, PATTERN_COLUMNS, rows())


def write_pattern_classes_csv(collection: PatternCollection, fs: FareStructure, path) -> None:
    header = ("pattern_id", "interval_index", "class_label", "cumulative_bookings")

    def rows():
        for p in collection.patterns:
            for idx in range(p.n_intervals):
                for j, label in enumerate(fs.labels):
                    yield (p.scenario_id, idx + 1, label, int(p.per_class_cumulative[idx, j]))

    _write_rows(path, header, rows())


def read_patterns_csv(path) -> PatternCollection:
    """Read a pattern collection written by write_patterns_csv.

    Per-class detail is not needed by the detectors, so patterns are
    reconstructed with all bookings attributed to a single pseudo class.
    """
    path = Path(path)
    rows: dict[str, dict[int, int]] = {}
    labels: dict[str, ScenarioLabel] = {}
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in PATTERN_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise ValueError(f"missing columns: {', '.join(missing)}")
        for row in reader:
            pid = row["pattern_id"]
            rows.setdefault(pid, {})[int(row["interval_index"])] = int(
                float(row["cumulative_bookings"])
            )
            outlier = row["truth_label"] == "outlier"
            labels[pid] = ScenarioLabel(outlier, row["kind"] if outlier else "")
    patterns = []
    for pid in sorted(rows):
        per = rows[pid]
        total = np.array([per[i] for i in sorted(per)])
        patterns.append(
            BookingPattern(
                per_class_cumulative=total[:, None],
                total_cumulative=total,
                revenue_cumulative=np.zeros(len(total)),
                truth=labels[pid],
                scenario_id=pid,
            )
        )
    return PatternCollection(tuple(patterns))


def write_controls_csv(controls: BookingControls, fs: FareStructure, path) -> None:
    header = ("class_label", "fare", "protection_level", "booking_limit", "heuristic")
    rows = [
        (label, fare, pl, bl, controls.heuristic)
        for label, fare, pl, bl in zip(fs.labels, fs.fares, controls.protection, controls.limits)
    ]
    _write_rows(path, header, rows)


def write_forecast_csv(fc: ForecastSet, fs: FareStructure, path) -> None:
    header = ("class_label", "fare", "mu", "var", "se_mu", "se_var")
    rows = [
        (label, fare, float(m), float(v), float(sm), float(sv))
        for label, fare, m, v, sm, sv in zip(
            fs.labels, fs.fares, fc.mu, fc.var, fc.se_mu, fc.se_var
        )
    ]
    _write_rows(path, header, rows)


def write_flags_csv(run: DetectionRun, pattern_ids, path) -> None:
    header = ("method", "pattern_id", "interval_index", "score", "flagged")

    def rows():
        for tau in range(1, run.flags.shape[1] + 1):
            if not run.evaluated[tau - 1]:
                continue
            for n, pid in enumerate(pattern_ids):
                yield (
                    run.method,
                    pid,
                    tau,
                    float(run.scores[n, tau - 1]),
                    int(run.flags[n, tau - 1]),
                )

    _write_rows(path, header, rows())


def write_depths_csv(run: DetectionRun, pattern_ids, path) -> None:
    """Functional-depth dump: depth, threshold, and the trimming pass that
    flagged each pattern (0 = never flagged), per evaluated interval count."""
    header = ("pattern_id", "interval_count_used", "depth", "threshold", "flagged",
              "iteration_flagged")

    def rows():
        for tau in range(1, run.flags.shape[1] + 1):
            if not run.evaluated[tau - 1]:
                continue
            iters = run.extras.get(tau, {}).get("iteration_flagged")
            for n, pid in enumerate(pattern_ids):
                yield (
                    pid,
                    tau,
                    -float(run.scores[n, tau - 1]),
                    -float(run.thresholds[tau - 1]),
                    int(run.flags[n, tau - 1]),
                    int(iters[n]) if iters is not None else "",
                )

    _write_rows(path, header, rows())


def write_report_csv(rows, path) -> None:
    header = ("detector", "tau", "tp", "tn", "fp", "fn", "tpr", "fpr", "bcr", "lr_plus")
    _write_rows(
        path,
        header,
        (
            tuple(row[k] for k in ("detector", "tau", "tp", "tn", "fp", "fn"))
            + tuple(float(row[k]) for k in ("tpr", "fpr", "bcr", "lr_plus"))
            for row in rows
        ),
    )


def write_roc_csv(curves: dict, path) -> None:
    header = ("detector", "tau", "threshold", "fpr", "tpr")

    def rows():
        for (det, tau), curve in sorted(curves.items()):
            for f, t, thr in curve.points:
                yield (det, tau, float(thr), float(f), float(t))

    _write_rows(path, header, rows())


def write_revenue_rows_csv(rows, path) -> None:
    keys = tuple(rows[0].keys()) if rows else ("empty",)
    _write_rows(path, keys, (tuple(row[k] for k in keys) for row in rows))


def write_completions_csv(completed, models, pattern_ids, tau, method, path) -> None:
    header = ("pattern_id", "interval_index", "value", "is_extrapolated", "method", "model")

    def rows():
        for n, pid in enumerate(pattern_ids):
            summary = json.dumps(models[n], sort_keys=True) if models[n] else ""
            for idx in range(completed.shape[1]):
                yield (
                    pid,
                    idx + 1,
                    float(completed[n, idx]),
                    int(idx + 1 > tau),
                    method,
                    summary,
                )

    _write_rows(path, header, rows())


def write_request_stream_csv(stream, path) -> None:
    header = ("time", "segment", "wtp_class")
    _write_rows(
        path,
        header,
        ((float(t), int(s), int(w)) for t, s, w in zip(stream.times, stream.segments, stream.wtp)),
    )


def config_hash(config: dict) -> str:
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(canonical).hexdigest()


def write_manifest(out_dir, command: str, config: dict, seed: int, extra: dict | None = None) -> None:
    import scipy

    doc = {
        "command": command,
        "config_sha256": config_hash(config),
        "seed": seed,
        "versions": {
            "bookingbench": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
    }
    if extra:
        doc.update(extra)
    out = Path(out_dir) / "manifest.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
