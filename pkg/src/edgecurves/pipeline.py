"""End-to-end orchestration: score, threshold, NMS, proposals, selection, metrics."""

from __future__ import annotations

from dataclasses import dataclass, field, fields, is_dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .closed_proposals import ClosedConfig, generate_closed_proposals, geometric_features, oracle_features
from .detection import (
    DetectionConfig,
    Detections,
    GroundTruthLabels,
    PointScores,
    covariance_scorer,
    detect_corners,
    oracle_scorer,
    threshold_points,
)
from .geometry import PointCloud, distance_to_curve
from .metrics import EvalReport, evaluate, segmentation_precision
from .open_proposals import ProposalConfig, generate_open_proposals
from .selection import CurveSet, SelectionConfig, select_closed, select_open

SCORERS = ("oracle", "covariance", "sidecar")
MODES = ("combined", "open_only", "closed_only")


class PipelineError(RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass(frozen=True)
class PipelineConfig:
    detection: DetectionConfig = field(default_factory=DetectionConfig)
    proposals: ProposalConfig = field(default_factory=ProposalConfig)
    closed: ClosedConfig = field(default_factory=ClosedConfig)
    selection: SelectionConfig = field(default_factory=SelectionConfig)
    scorer: str = "oracle"
    mode: str = "combined"
    sidecar: Optional[str] = None

    def __post_init__(self):
        if self.scorer not in SCORERS:
            raise ValueError(f"unknown scorer {self.scorer!r}")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.scorer == "sidecar" and not self.sidecar:
            raise ValueError("the sidecar scorer needs a sidecar path")

    # flat dotted view, used by the CLI and config files
    def flat(self) -> dict:
        return {key: value for key, (value, _) in self._flat_typed().items()}

    def _flat_typed(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if is_dataclass(v):
                for g in fields(v):
                    out[f"{f.name}.{g.name}"] = (getattr(v, g.name), str(g.type))
            else:
                out[f.name] = (v, str(f.type))
        return out

    def with_overrides(self, overrides: dict) -> "PipelineConfig":
        """Copy with dotted-key overrides applied; string values are parsed by the field's annotation."""
        typed = self._flat_typed()
        nested: dict = {}
        top: dict = {}
        for key, raw in overrides.items():
            if key not in typed:
                raise KeyError(f"unknown configuration key {key!r}")
            value = parse_value(raw, typed[key][1], key)
            if "." in key:
                sec, name = key.split(".", 1)
                nested.setdefault(sec, {})[name] = value
            else:
                top[key] = value
        cfg = self
        for sec, vals in nested.items():
            cfg = replace(cfg, **{sec: replace(getattr(cfg, sec), **vals)})
        return replace(cfg, **top) if top else cfg


def parse_value(raw, annotation: str, key: str = ""):
    """Parse a config string according to a field annotation such as ``Optional[float]``."""
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    if "Optional" in annotation and text.lower() in ("", "none", "null"):
        return None
    try:
        if "bool" in annotation:
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if "int" in annotation:
            return int(text)
        if "float" in annotation:
            return float(text)
    except ValueError:
        raise ValueError(f"{key}: cannot parse {raw!r} as {annotation}") from None
    return text


@dataclass
class PipelineResult:
    curves: CurveSet
    report: Optional[EvalReport]
    scores: PointScores
    detections: Detections
    corners: list
    open_proposals: list = field(default_factory=list)
    closed_proposals: list = field(default_factory=list)
    mode_used: str = "combined"
    segmentation_precision: Optional[float] = None


def score_cloud(cloud: PointCloud, cfg: PipelineConfig, gt: Optional[GroundTruthLabels] = None,
                scores: Optional[PointScores] = None) -> PointScores:
    if scores is not None:
        return scores
    if cfg.scorer == "oracle":
        if gt is None:
            raise ValueError("the oracle scorer needs ground truth")
        return oracle_scorer(gt)
    if cfg.scorer == "covariance":
        return covariance_scorer(cloud, cfg.detection.k_neighbors)
    from .io import read_scores

    return read_scores(cfg.sidecar, len(cloud))


def claimed_mask(edge_pos: np.ndarray, open_kept: Sequence, cfg: ProposalConfig) -> np.ndarray:
    """Edge points lying within the segmentation tolerance of a selected open curve."""
    claimed = np.zeros(len(edge_pos), dtype=bool)
    for p in open_kept:
        tol = cfg.segment_tol * p.pair.radius
        claimed |= distance_to_curve(edge_pos, p.curve) < tol
    return claimed


def closed_features(edge_idx: np.ndarray, edge_pos: np.ndarray, cfg: PipelineConfig, scale: float,
                    gt: Optional[GroundTruthLabels]) -> np.ndarray:
    if cfg.closed.feature_kind == "oracle":
        if gt is None:
            raise ValueError("oracle closed-curve features need ground truth")
        return oracle_features(gt.curve_id[edge_idx], cfg.closed.K_margin)
    return geometric_features(edge_pos, scale, cfg.closed.K_margin, cfg.closed.k_neighbors)


def propose(cloud: PointCloud, scores: PointScores, cfg: PipelineConfig,
            gt: Optional[GroundTruthLabels] = None):
    """Detection plus both proposal stages; returns (detections, corners, open, closed, mode_used)."""
    try:
        det = threshold_points(cloud, scores, cfg.detection)
        corners = detect_corners(cloud, det, cfg.detection)
    except Exception as exc:  # noqa: BLE001 - re-raised with the stage name
        raise PipelineError("detection", exc) from exc
    mode = cfg.mode
    if mode != "closed_only" and len(corners) < 2:
        mode = "closed_only"
    open_props, closed_props = [], []
    if mode in ("combined", "open_only"):
        try:
            open_props = generate_open_proposals(corners, det.edge_pos, cfg.proposals)
        except Exception as exc:  # noqa: BLE001
            raise PipelineError("open proposals", exc) from exc
    if mode in ("combined", "closed_only") and len(det.edge_idx):
        try:
            allowed = None
            if mode == "combined" and open_props:
                kept = select_open(open_props, cfg.selection)
                allowed = ~claimed_mask(det.edge_pos, kept, cfg.proposals)
            F = closed_features(det.edge_idx, det.edge_pos, cfg, cloud.bbox_diagonal, gt)
            closed_props = generate_closed_proposals(det.edge_pos, F, cfg.closed, allowed)
        except Exception as exc:  # noqa: BLE001
            raise PipelineError("closed proposals", exc) from exc
    return det, corners, open_props, closed_props, mode


def run_pipeline(cloud: PointCloud, gt: Optional[GroundTruthLabels] = None,
                 cfg: PipelineConfig = PipelineConfig(), gt_curves: Optional[Sequence] = None,
                 scores: Optional[PointScores] = None, scene: str = "") -> PipelineResult:
    """Run every stage; metrics are attached when both ``gt`` and ``gt_curves`` are given."""
    if len(cloud) == 0:
        raise PipelineError("input", ValueError("empty cloud"))
    try:
        scores = score_cloud(cloud, cfg, gt, scores)
    except Exception as exc:  # noqa: BLE001
        raise PipelineError("scoring", exc) from exc
    det, corners, open_props, closed_props, mode = propose(cloud, scores, cfg, gt)
    try:
        curves = CurveSet(select_open(open_props, cfg.selection), select_closed(closed_props, cfg.selection))
    except Exception as exc:  # noqa: BLE001
        raise PipelineError("selection", exc) from exc
    report = None
    seg = None
    if gt is not None:
        ids_e = gt.curve_id[det.edge_idx]
        seg = segmentation_precision([p.members for p in curves.open] + [p.members for p in curves.closed], ids_e)
        if gt_curves is not None:
            report = evaluate(curves.curves, list(gt_curves), det.edge_idx, np.flatnonzero(gt.edge),
                              scale=cloud.bbox_diagonal, scene=scene)
    return PipelineResult(curves, report, scores, det, corners, open_props, closed_props, mode, seg)


def run_scene(scene, cfg: PipelineConfig = PipelineConfig(), name: str = "") -> PipelineResult:
    """Convenience wrapper for a :class:`~edgecurves.synthdata.SyntheticScene`."""
    return run_pipeline(scene.cloud, scene.gt, cfg, list(scene.curves), scene=name)
