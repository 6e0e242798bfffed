"""Outlier detectors operating per interval on pattern collections."""

from .base import DetectionRun, DetectorSpec, available_methods, run_detector
from .baseline import (
    distance_detector,
    kmeans_detector,
    np_tolerance_detector,
    percentile_detector,
    poisson_tolerance_detector,
    robust_z_detector,
)
from .functional import (
    DepthResult,
    bootstrap_threshold,
    functional_detector,
    halfspace_depth_1d,
    mfhd,
)

__all__ = [
    "DetectionRun",
    "DetectorSpec",
    "available_methods",
    "run_detector",
    "percentile_detector",
    "np_tolerance_detector",
    "poisson_tolerance_detector",
    "robust_z_detector",
    "distance_detector",
    "kmeans_detector",
    "halfspace_depth_1d",
    "mfhd",
    "bootstrap_threshold",
    "functional_detector",
    "DepthResult",
]
