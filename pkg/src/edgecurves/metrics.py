"""Evaluation: edge classification scores, edge Chamfer distance and per-scene reports."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .geometry import bbox_diagonal, canonical_samples, chamfer_distance, distance_to_curve


class EmptyCurveSet(ValueError):
    pass


@dataclass(frozen=True)
class EvalReport:
    ecd: float
    iou: float
    precision: float
    recall: float
    tp: int
    fp: int
    fn: int
    scene: str = ""

    def row(self) -> dict:
        return {"scene": self.scene, "ecd": self.ecd, "iou": self.iou, "precision": self.precision,
                "recall": self.recall, "tp": self.tp, "fp": self.fp, "fn": self.fn}


def _ratio(num: int, den: int, both_empty: bool) -> float:
    if den == 0:
        return 1.0 if both_empty else 0.0
    return num / den


def edge_classification_metrics(predicted, truth) -> tuple[float, float, float]:
    """(IoU, precision, recall) of two index sets.

    An empty denominator scores 1 when both sets are empty and 0 otherwise.
    """
    tp, fp, fn = confusion_counts(predicted, truth)
    both_empty = tp + fp + fn == 0
    return (_ratio(tp, tp + fp + fn, both_empty), _ratio(tp, tp + fp, both_empty),
            _ratio(tp, tp + fn, both_empty))


def confusion_counts(predicted, truth) -> tuple[int, int, int]:
    P = set(np.asarray(predicted).reshape(-1).tolist())
    T = set(np.asarray(truth).reshape(-1).tolist())
    return len(P & T), len(P - T), len(T - P)


def sample_curve_set(curves: Sequence, scale: float, samples_per_unit_length: float = 256.0,
                     min_samples: int = 16) -> np.ndarray:
    """Length-proportional samples of every curve; the density is per unit of ``scale``."""
    chunks = []
    for c in curves:
        m = max(min_samples, int(math.ceil(samples_per_unit_length * c.length() / scale)))
        chunks.append(c.sample(m))
    return np.vstack(chunks)


def _mean_distance_to_curves(samples: np.ndarray, curves: Sequence) -> float:
    d = np.full(len(samples), np.inf)
    for c in curves:
        d = np.minimum(d, distance_to_curve(samples, c))
    return float(d.mean())


def edge_chamfer_distance(predicted: Sequence, truth: Sequence, samples_per_unit_length: float = 256.0,
                          scale: Optional[float] = None, min_samples: int = 16) -> float:
    """Symmetric Chamfer distance between two curve sets after unit-diagonal normalisation.

    Dense length-proportional samples of each set are measured against the
    exact curves of the other set, which is the sample-to-sample Chamfer
    distance in the limit of infinite density on the target side. This keeps
    the value free of sampling phase (identical circles score zero) and exactly
    invariant under rigid motions. ``scale`` is the scene's bounding-box
    diagonal; when omitted, the diagonal of the ground-truth curve samples is used.
    """
    if len(predicted) == 0 or len(truth) == 0:
        raise EmptyCurveSet("edge Chamfer distance needs non-empty curve sets")
    if scale is None:
        scale = bbox_diagonal(np.vstack([c.sample(64) for c in truth]))
    a = sample_curve_set(predicted, scale, samples_per_unit_length, min_samples)
    b = sample_curve_set(truth, scale, samples_per_unit_length, min_samples)
    return (_mean_distance_to_curves(a, truth) + _mean_distance_to_curves(b, predicted)) / scale


def segmentation_precision(member_sets: Sequence[np.ndarray], point_curve_ids: np.ndarray) -> float:
    """Mean over proposals of the fraction of members sharing the proposal's majority true curve.

    Members with no true curve never count as correct. Returns 1 for no proposals.
    """
    ids = np.asarray(point_curve_ids).reshape(-1)
    vals = []
    for members in member_sets:
        lab = ids[np.asarray(members, dtype=int)]
        lab = lab[lab >= 0]
        if len(members) == 0:
            continue
        if len(lab) == 0:
            vals.append(0.0)
            continue
        _, counts = np.unique(lab, return_counts=True)
        vals.append(counts.max() / len(members))
    return float(np.mean(vals)) if vals else 1.0


def evaluate(pred_curves: Sequence, gt_curves: Sequence, pred_edge_idx, gt_edge_idx,
             scale: Optional[float] = None, scene: str = "") -> EvalReport:
    tp, fp, fn = confusion_counts(pred_edge_idx, gt_edge_idx)
    iou, prec, rec = edge_classification_metrics(pred_edge_idx, gt_edge_idx)
    if len(pred_curves) and len(gt_curves):
        ecd = edge_chamfer_distance(pred_curves, gt_curves, scale=scale)
    elif len(pred_curves) == 0 and len(gt_curves) == 0:
        ecd = 0.0
    else:
        ecd = math.inf
    return EvalReport(ecd, iou, prec, rec, tp, fp, fn, scene)


def curve_recovery(pred_curves: Sequence, gt_curves: Sequence, scale: float, tol: float = 0.01,
                   samples: int = 128) -> float:
    """Fraction of ground-truth curves matched by some prediction with normalised CD below ``tol``."""
    if not gt_curves:
        return 1.0
    preds = [canonical_samples(c, samples) / scale for c in pred_curves]
    hit = 0
    for g in gt_curves:
        gs = canonical_samples(g, samples) / scale
        if any(chamfer_distance(p, gs) < tol for p in preds):
            hit += 1
    return hit / len(gt_curves)


# --------------------------------------------------------------------------- #
# Reports
# --------------------------------------------------------------------------- #

CSV_FIELDS = ("scene", "ecd", "iou", "precision", "recall")


def reports_to_csv(reports: Sequence[EvalReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in reports:
        w.writerow([r.scene] + [repr(float(getattr(r, k))) for k in CSV_FIELDS[1:]])
    return buf.getvalue()


def summarize(reports: Sequence[EvalReport]) -> dict:
    out = {"scenes": len(reports)}
    for k in CSV_FIELDS[1:]:
        vals = [getattr(r, k) for r in reports]
        out[f"mean_{k}"] = float(np.mean(vals)) if vals else None
    return out


def summary_json(reports: Sequence[EvalReport]) -> str:
    return json.dumps({"summary": summarize(reports), "scenes": [r.row() for r in reports]}, indent=2,
                      sort_keys=True)
