"""Parametric feature-curve inference for 3D point clouds."""

from .geometry import CircleCanonical, CubicBSpline, LineSegment, PointCloud, chamfer_distance
from .pipeline import PipelineConfig, PipelineError, PipelineResult, run_pipeline, run_scene
from .synthdata import SceneSpec, fixture_suite, generate

__version__ = "0.1.0"

__all__ = [
    "CircleCanonical", "CubicBSpline", "LineSegment", "PointCloud", "chamfer_distance",
    "PipelineConfig", "PipelineError", "PipelineResult", "run_pipeline", "run_scene",
    "SceneSpec", "fixture_suite", "generate",
]
