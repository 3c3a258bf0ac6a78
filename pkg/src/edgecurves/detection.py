"""Edge/corner point scoring, thresholding, corner NMS and the detection losses."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.spatial import cKDTree

from .geometry import PointCloud, as_points

PROB_CLAMP = 1e-7


class LengthMismatch(ValueError):
    pass


class CloudTooSmall(ValueError):
    pass


@dataclass(frozen=True)
class PointScores:
    t_edge: np.ndarray
    t_corner: np.ndarray
    d_edge: np.ndarray
    d_corner: np.ndarray

    def __post_init__(self):
        n = len(self.t_edge)
        for name in ("t_edge", "t_corner"):
            arr = np.asarray(getattr(self, name), dtype=float).reshape(-1)
            if len(arr) != n:
                raise LengthMismatch(f"{name} has {len(arr)} entries, expected {n}")
            if np.any((arr < 0) | (arr > 1)):
                raise ValueError(f"{name} must hold probabilities in [0, 1]")
            object.__setattr__(self, name, arr)
        for name in ("d_edge", "d_corner"):
            arr = np.asarray(getattr(self, name), dtype=float).reshape(-1, 3)
            if len(arr) != n:
                raise LengthMismatch(f"{name} has {len(arr)} rows, expected {n}")
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return len(self.t_edge)


@dataclass(frozen=True)
class GroundTruthLabels:
    edge: np.ndarray
    corner: np.ndarray
    d_edge: np.ndarray
    d_corner: np.ndarray
    curve_id: np.ndarray  # -1 where the point belongs to no curve

    def __post_init__(self):
        n = len(self.edge)
        object.__setattr__(self, "edge", np.asarray(self.edge, dtype=bool).reshape(-1))
        object.__setattr__(self, "corner", np.asarray(self.corner, dtype=bool).reshape(-1))
        object.__setattr__(self, "d_edge", np.asarray(self.d_edge, dtype=float).reshape(-1, 3))
        object.__setattr__(self, "d_corner", np.asarray(self.d_corner, dtype=float).reshape(-1, 3))
        object.__setattr__(self, "curve_id", np.asarray(self.curve_id, dtype=np.int64).reshape(-1))
        for name in ("corner", "d_edge", "d_corner", "curve_id"):
            if len(getattr(self, name)) != n:
                raise LengthMismatch(f"{name} length differs from edge labels")
        if not np.all(np.isfinite(self.d_edge[self.edge])):
            raise ValueError("edge offsets must be finite on labelled edge points")
        if not np.all(np.isfinite(self.d_corner[self.corner])):
            raise ValueError("corner offsets must be finite on labelled corner points")

    def __len__(self) -> int:
        return len(self.edge)

    def subset(self, idx: np.ndarray) -> "GroundTruthLabels":
        return GroundTruthLabels(self.edge[idx], self.corner[idx], self.d_edge[idx],
                                 self.d_corner[idx], self.curve_id[idx])


@dataclass(frozen=True)
class DetectionConfig:
    tau_e: float = 0.7
    tau_c: float = 0.9
    delta_factor: float = 0.05
    lambda_e: float = 100.0
    lambda_c: float = 100.0
    focal_gamma: float = 2.0
    focal_alpha: float = 0.25
    apply_edge_offset: bool = True
    k_neighbors: int = 16

    def __post_init__(self):
        if not (0 < self.tau_e < 1 and 0 < self.tau_c < 1):
            raise ValueError("thresholds must lie in (0, 1)")
        if self.delta_factor <= 0:
            raise ValueError("delta_factor must be positive")


# --------------------------------------------------------------------------- #
# Losses
# --------------------------------------------------------------------------- #


def focal_loss(prob, labels, gamma: float = 2.0, alpha: float = 0.25) -> float:
    """Mean alpha-balanced focal loss of binary predictions.

    Positives are weighted by ``alpha`` and negatives by ``1 - alpha``. ``alpha = 1``
    would silence the negative class entirely, so it is read as "no class
    balancing" instead; with ``gamma = 0`` this is plain binary cross-entropy.
    """
    p = np.asarray(prob, dtype=float).reshape(-1)
    y = np.asarray(labels).reshape(-1).astype(bool)
    if len(p) != len(y):
        raise LengthMismatch(f"{len(p)} predictions vs {len(y)} labels")
    if len(p) == 0:
        return 0.0
    p = np.clip(p, PROB_CLAMP, 1.0 - PROB_CLAMP)
    p_t = np.where(y, p, 1.0 - p)
    if alpha == 1.0:
        a_t = np.ones_like(p)
    else:
        a_t = np.where(y, alpha, 1.0 - alpha)
    return float(np.mean(-a_t * (1.0 - p_t) ** gamma * np.log(p_t)))


def binary_cross_entropy(prob, labels) -> float:
    p = np.clip(np.asarray(prob, dtype=float).reshape(-1), PROB_CLAMP, 1.0 - PROB_CLAMP)
    y = np.asarray(labels).reshape(-1).astype(bool)
    return float(np.mean(-np.log(np.where(y, p, 1.0 - p))))


def smooth_l1(pred, target, mask=None) -> float:
    """Mean over masked points of the per-component smooth-L1, summed over x, y, z."""
    pred = np.asarray(pred, dtype=float).reshape(-1, 3)
    target = np.asarray(target, dtype=float).reshape(-1, 3)
    if pred.shape != target.shape:
        raise LengthMismatch(f"{len(pred)} offsets vs {len(target)} targets")
    if mask is None:
        mask = np.ones(len(pred), dtype=bool)
    mask = np.asarray(mask).reshape(-1).astype(bool)
    if len(mask) != len(pred):
        raise LengthMismatch("mask length differs from offsets")
    if not mask.any():
        return 0.0
    x = np.abs(pred[mask] - target[mask])
    per = np.where(x < 1.0, 0.5 * x * x, x - 0.5).sum(axis=1)
    return float(per.mean())


def detection_loss(scores: PointScores, gt: GroundTruthLabels, cfg: DetectionConfig = DetectionConfig()) -> float:
    if len(scores) != len(gt):
        raise LengthMismatch(f"{len(scores)} scores vs {len(gt)} labels")
    edge = focal_loss(scores.t_edge, gt.edge, cfg.focal_gamma, cfg.focal_alpha) + cfg.lambda_e * smooth_l1(
        scores.d_edge, gt.d_edge, gt.edge
    )
    corner = focal_loss(scores.t_corner, gt.corner, cfg.focal_gamma, cfg.focal_alpha) + cfg.lambda_c * smooth_l1(
        scores.d_corner, gt.d_corner, gt.corner
    )
    return edge + corner


# --------------------------------------------------------------------------- #
# Thresholding and NMS
# --------------------------------------------------------------------------- #


@dataclass(frozen=True)
class Detections:
    edge_idx: np.ndarray
    edge_pos: np.ndarray
    corner_idx: np.ndarray  # raw candidates before NMS
    corner_pos: np.ndarray
    corner_prob: np.ndarray


def threshold_points(cloud: PointCloud, scores: PointScores, cfg: DetectionConfig = DetectionConfig()) -> Detections:
    pts = cloud.points
    e = np.flatnonzero(scores.t_edge > cfg.tau_e)
    c = np.flatnonzero(scores.t_corner > cfg.tau_c)
    e_pos = pts[e] + scores.d_edge[e] if cfg.apply_edge_offset else pts[e].copy()
    c_pos = pts[c] + scores.d_corner[c]
    return Detections(e, e_pos, c, c_pos, scores.t_corner[c])


@dataclass(frozen=True)
class Corner:
    index: int  # source point index
    position: np.ndarray
    prob: float


def corner_nms(positions, probs, delta: float, indices=None) -> list[Corner]:
    """Complete-linkage clustering capped at ``delta``, one max-probability corner per cluster."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    pos = as_points(positions) if len(positions) else np.zeros((0, 3))
    probs = np.asarray(probs, dtype=float).reshape(-1)
    indices = np.arange(len(pos)) if indices is None else np.asarray(indices).reshape(-1)
    if len(pos) == 0:
        return []
    if len(pos) == 1:
        labels = np.array([1])
    else:
        labels = fcluster(linkage(pos, method="complete"), t=delta, criterion="distance")
    out = []
    for lab in np.unique(labels):
        members = np.flatnonzero(labels == lab)
        # highest probability, ties to the lowest point index
        best = min(members, key=lambda i: (-probs[i], indices[i]))
        out.append(Corner(int(indices[best]), pos[best].copy(), float(probs[best])))
    out.sort(key=lambda c: c.index)
    return out


def detect_corners(cloud: PointCloud, det: Detections, cfg: DetectionConfig = DetectionConfig()) -> list[Corner]:
    return corner_nms(det.corner_pos, det.corner_prob, cfg.delta_factor * cloud.bbox_diagonal, det.corner_idx)


# --------------------------------------------------------------------------- #
# Scorers
# --------------------------------------------------------------------------- #


def oracle_scorer(gt: GroundTruthLabels) -> PointScores:
    d_edge = np.where(gt.edge[:, None], gt.d_edge, 0.0)
    d_corner = np.where(gt.corner[:, None], gt.d_corner, 0.0)
    return PointScores(gt.edge.astype(float), gt.corner.astype(float), d_edge, d_corner)


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


# calibration of the covariance scorer; surface variation is at most 1/3
EDGE_SIGMA_MID = 0.03
EDGE_SIGMA_WIDTH = 0.006
CORNER_SIGMA_MID = 0.14
CORNER_SIGMA_WIDTH = 0.01
CORNER_RATIO_MID = 0.6
CORNER_RATIO_WIDTH = 0.05
# isolated 1D structures (wire samples) have no surface variation but are all edge
LINEAR_MID = 0.97
LINEAR_WIDTH = 0.005


def local_eigenvalues(points: np.ndarray, k_neighbors: int) -> np.ndarray:
    """Descending eigenvalues of each point's k-NN covariance (neighbourhood includes the point)."""
    pts = as_points(points)
    _, idx = cKDTree(pts).query(pts, k=k_neighbors + 1)
    nbr = pts[idx]
    centred = nbr - nbr.mean(axis=1, keepdims=True)
    cov = np.einsum("nki,nkj->nij", centred, centred) / (k_neighbors + 1)
    return np.clip(np.linalg.eigvalsh(cov)[:, ::-1], 0.0, None)


def covariance_scorer(cloud: PointCloud, k_neighbors: int = 16) -> PointScores:
    """Classical edge/corner scores from local covariance; offsets are zero."""
    if k_neighbors < 4:
        raise ValueError("k_neighbors must be at least 4")
    n = len(cloud)
    if n < k_neighbors + 1:
        raise CloudTooSmall(f"{n} points, need at least {k_neighbors + 1}")
    lam = local_eigenvalues(cloud.points, k_neighbors)
    total = lam.sum(axis=1)
    # rounding noise of a zero-extent neighbourhood stays far below this
    scale = max(cloud.bbox_diagonal, float(np.abs(cloud.points).max()), 1e-150) ** 2
    valid = total > 1e-24 * scale
    safe = np.where(valid, total, 1.0)
    sigma = np.where(valid, lam[:, 2] / safe, 0.0)
    ratio = np.where(lam[:, 0] > 0, lam[:, 1] / np.where(lam[:, 0] > 0, lam[:, 0], 1.0), 0.0)
    linearity = np.where(lam[:, 0] > 0, 1.0 - ratio, 0.0)
    t_edge = np.where(valid, np.maximum(_sigmoid((sigma - EDGE_SIGMA_MID) / EDGE_SIGMA_WIDTH),
                                        _sigmoid((linearity - LINEAR_MID) / LINEAR_WIDTH)), 0.0)
    t_corner = np.where(
        valid,
        _sigmoid((sigma - CORNER_SIGMA_MID) / CORNER_SIGMA_WIDTH)
        * _sigmoid((ratio - CORNER_RATIO_MID) / CORNER_RATIO_WIDTH),
        0.0,
    )
    zeros = np.zeros((n, 3))
    return PointScores(t_edge, t_corner, zeros, zeros)
