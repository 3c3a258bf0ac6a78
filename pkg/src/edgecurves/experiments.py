"""Suite-level sweeps shared by the acceptance tests and the scripts in ``scripts/``."""
from __future__ import annotations

import dataclasses
from typing import Iterable, Optional, Sequence

import numpy as np

from .detection import DetectionConfig, covariance_scorer, threshold_points
from .metrics import edge_classification_metrics
from .pipeline import PipelineConfig, run_scene
from .synthdata import FIXTURE_SPECS, add_noise, dihedral_scene, generate, subsample


def detection_metrics(scene, cfg: DetectionConfig = DetectionConfig()) -> tuple[float, float, float]:
    """(IoU, precision, recall) of covariance-scored edge points against the labels."""
    scores = covariance_scorer(scene.cloud, cfg.k_neighbors)
    det = threshold_points(scene.cloud, scores, cfg)
    return edge_classification_metrics(det.edge_idx, np.flatnonzero(scene.gt.edge))


def stressed(spec, X: float = 0.0, P: Optional[int] = None):
    scene = generate(spec)
    if X > 0:
        scene = add_noise(scene, X, seed=spec.seed)
    if P is not None and P < len(scene.cloud):
        scene = subsample(scene, P, seed=spec.seed)
    return scene


def noise_sweep(Xs: Iterable[float], specs: Sequence = FIXTURE_SPECS,
                cfg: DetectionConfig = DetectionConfig()) -> dict:
    """Mean (IoU, precision, recall) over the suite for each noise level."""
    return {X: tuple(np.mean([detection_metrics(stressed(s, X=X), cfg) for s in specs], axis=0)) for X in Xs}


def density_sweep(Ps: Iterable[int], specs: Sequence = FIXTURE_SPECS,
                  cfg: DetectionConfig = DetectionConfig()) -> dict:
    return {P: tuple(np.mean([detection_metrics(stressed(s, P=P), cfg) for s in specs], axis=0)) for P in Ps}


def dihedral_recall(cfg: DetectionConfig = DetectionConfig()) -> float:
    return detection_metrics(dihedral_scene(), cfg)[2]


def radius_ablation(values: Iterable[float], scenes: Sequence,
                    cfg: PipelineConfig = PipelineConfig()) -> dict:
    """Mean segmentation precision and mean ECD per radius scale, oracle scorer."""
    out = {}
    for v in values:
        c = dataclasses.replace(cfg, proposals=dataclasses.replace(cfg.proposals, radius_scale=v))
        res = [run_scene(s, c) for s in scenes]
        out[v] = (float(np.mean([r.segmentation_precision for r in res])),
                  float(np.mean([r.report.ecd for r in res])))
    return out
