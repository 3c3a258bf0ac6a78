"""Closed-curve (full circle) proposals from thresholded rows of a feature-distance matrix."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.spatial import cKDTree
from scipy.spatial.distance import pdist, squareform

from ._kernels import nn_mean
from .detection import LengthMismatch
from .geometry import (
    TWO_PI,
    CircleCanonical,
    CollinearPoints,
    DuplicatePoints,
    GeometryError,
    as_points,
    canonical_samples,
    chamfer_distance,
    circle_from_three_points,
    point_circle_distance,
)
from .open_proposals import farthest_point_sampling


class ClosedProposalError(ValueError):
    pass


class CollinearCluster(ClosedProposalError):
    pass


class TooFewMembers(ClosedProposalError):
    pass


@dataclass(frozen=True)
class ClosedConfig:
    K_margin: float = 100.0
    S_bar: Optional[float] = None  # defaults to half the margin
    min_members: int = 8
    feature_kind: str = "oracle"  # or "geometric"
    k_neighbors: int = 12
    coverage_bins: int = 32
    cost_samples: int = 64
    maxfev: int = 600

    def __post_init__(self):
        if self.S_bar is None:
            object.__setattr__(self, "S_bar", 0.5 * self.K_margin)
        if self.S_bar <= 0:
            raise ValueError("S_bar must be positive")
        if self.min_members < 3:
            raise ValueError("min_members must be >= 3")
        if self.feature_kind not in ("oracle", "geometric"):
            raise ValueError(f"unknown feature kind {self.feature_kind!r}")


@dataclass(frozen=True)
class ClosedProposal:
    seed: int
    members: np.ndarray  # indices into the edge set
    member_points: np.ndarray
    anchors: np.ndarray  # (3, 3) positions p_a, p_b, p_c
    offsets: np.ndarray  # (3, 3) offsets added to the anchors
    circle: CircleCanonical
    fit_residual: float
    coverage: float
    confidence: float

    @property
    def curve(self) -> CircleCanonical:
        return self.circle


# --------------------------------------------------------------------------- #
# Features and similarity
# --------------------------------------------------------------------------- #


def oracle_features(curve_ids: np.ndarray, K: float = 100.0) -> np.ndarray:
    """One-hot encoding of the true curve id scaled by ``K``; unlabelled points share a column."""
    ids = np.asarray(curve_ids).reshape(-1)
    labels, inv = np.unique(ids, return_inverse=True)
    F = np.zeros((len(ids), max(len(labels), 1)))
    F[np.arange(len(ids)), inv] = K
    return F


def _plane_circle(pts: np.ndarray):
    """Algebraic least-squares circle in the best-fit plane: centre, normal, radius, rms residual."""
    mu = pts.mean(axis=0)
    _, _, vt = np.linalg.svd(pts - mu)
    e1, e2, n = vt[0], vt[1], vt[2]
    x = (pts - mu) @ e1
    y = (pts - mu) @ e2
    A = np.column_stack([x, y, np.ones_like(x)])
    b = x * x + y * y
    sol, *_ = np.linalg.lstsq(A, b, rcond=None)
    cx, cy = 0.5 * sol[0], 0.5 * sol[1]
    r2 = sol[2] + cx * cx + cy * cy
    r = math.sqrt(r2) if r2 > 0 else 0.0
    centre = mu + cx * e1 + cy * e2
    resid = float(np.sqrt(np.mean((np.hypot(x - cx, y - cy) - r) ** 2))) if r > 0 else math.inf
    return centre, n, r, resid


def geometric_features(points: np.ndarray, scale: float, K: float = 100.0, k_neighbors: int = 12) -> np.ndarray:
    """Eight-dimensional local circle descriptor per point.

    Each point's k-NN neighbourhood is fitted with a circle; the feature holds
    the circle centre, a sign-canonical normal, the radius and the fit residual.
    Lengths are divided by ``scale`` and everything is multiplied by ``K`` so
    points of one circle sit well within the threshold of each other.
    """
    pts = as_points(points)
    n = len(pts)
    F = np.zeros((n, 8))
    if n == 0:
        return F
    k = min(k_neighbors, n)
    _, idx = cKDTree(pts).query(pts, k=k)
    idx = np.asarray(idx).reshape(n, k)
    for i in range(n):
        nb = pts[idx[i]]
        if k < 3:
            F[i, :3] = pts[i] / scale
            continue
        centre, normal, r, resid = _plane_circle(nb)
        if not np.isfinite(resid) or r > 10 * scale:
            # locally straight: no meaningful centre
            centre, r, resid = pts[i], 10 * scale, 1.0 * scale
        j = int(np.argmax(np.abs(normal)))
        if normal[j] < 0:
            normal = -normal
        F[i, :3] = 4.0 * centre / scale
        F[i, 3:6] = normal
        F[i, 6] = 4.0 * r / scale
        F[i, 7] = resid / scale
    return K * F


def build_similarity(F: np.ndarray) -> np.ndarray:
    F = np.asarray(F, dtype=float)
    if F.ndim != 2 or len(F) == 0:
        raise ValueError("features must be a non-empty 2D array")
    if len(F) == 1:
        return np.zeros((1, 1))
    return squareform(pdist(F, "euclidean"))


def similarity_loss(S: np.ndarray, gt_ids: np.ndarray, K: float = 100.0) -> float:
    """Distance on same-curve pairs plus margin hinge on different-curve pairs.

    Sums run over ordered pairs. Points with id -1 belong to no curve and count
    as different from every other point.
    """
    S = np.asarray(S, dtype=float)
    ids = np.asarray(gt_ids).reshape(-1)
    if S.shape != (len(ids), len(ids)):
        raise LengthMismatch(f"similarity is {S.shape}, labels have {len(ids)} entries")
    same = (ids[:, None] == ids[None, :]) & (ids[:, None] >= 0)
    np.fill_diagonal(same, True)
    hinge = np.maximum(0.0, K - S)
    return float(np.where(same, S, 0.0).sum() + np.where(same, 0.0, hinge).sum())


def extract_clusters(S: np.ndarray, cfg: ClosedConfig = ClosedConfig(),
                     allowed: Optional[np.ndarray] = None) -> list[tuple[int, np.ndarray]]:
    """Row proposals ``(m, {j : S[m, j] < S_bar})``.

    ``allowed`` is an optional boolean mask of edge points that may take part
    (points not claimed by open curves in combined mode).
    """
    S = np.asarray(S)
    M = len(S)
    ok = np.ones(M, dtype=bool) if allowed is None else np.asarray(allowed, dtype=bool)
    out = []
    for m in range(M):
        if not ok[m]:
            continue
        members = np.flatnonzero((S[m] < cfg.S_bar) & ok)
        if len(members) >= cfg.min_members:
            out.append((m, members))
    return out


# --------------------------------------------------------------------------- #
# Circle fitting and confidence
# --------------------------------------------------------------------------- #


def circle_coverage(circle: CircleCanonical, pts: np.ndarray, bins: int = 32) -> float:
    if len(pts) == 0:
        return 0.0
    ang = circle.angles_of(pts)
    b = np.minimum((ang / TWO_PI * bins).astype(int), bins - 1)
    return len(np.unique(b)) / bins


def confidence_score(coverage: float, residual: float, radius: float) -> float:
    return float(coverage * math.exp(-residual / (0.05 * radius)))


def circle_cost(circle: CircleCanonical, pts: np.ndarray, samples: int = 64) -> float:
    """Two-sided cost: exact member-to-circle distance plus sampled circle-to-member distance."""
    return float(point_circle_distance(pts, circle).mean()) + float(
        nn_mean(np.ascontiguousarray(circle.sample(samples)), np.ascontiguousarray(pts)))


def fit_closed_circle(members: np.ndarray, seed: int, edge_pos: np.ndarray,
                      cfg: ClosedConfig = ClosedConfig()) -> ClosedProposal:
    """Fit a full circle to ``members`` through three offset anchors chosen by FPS from ``seed``."""
    members = np.asarray(members, dtype=int)
    if len(members) < 3:
        raise TooFewMembers(f"{len(members)} members, need at least 3")
    if seed not in members:
        raise ClosedProposalError("seed must be a member of its own cluster")
    pts = as_points(edge_pos)[members]
    seed_local = int(np.flatnonzero(members == seed)[0])
    anchor_idx = farthest_point_sampling(pts, 3, seed_local)
    anchors = pts[anchor_idx]
    try:
        circle_from_three_points(*anchors)
    except (CollinearPoints, DuplicatePoints) as exc:
        raise CollinearCluster(str(exc)) from exc

    def build(x):
        return circle_from_three_points(*(anchors + x.reshape(3, 3)))

    def objective(x):
        try:
            return circle_cost(build(x), pts, cfg.cost_samples)
        except GeometryError:
            return math.inf

    starts = [np.zeros(9)]
    if len(pts) > 3:
        centre, normal, r, _ = _plane_circle(pts)
        if r > 0:
            # anchors projected onto the least-squares circle
            rel = anchors - centre
            rel = rel - np.outer(rel @ normal, normal)
            norm = np.linalg.norm(rel, axis=1, keepdims=True)
            if np.all(norm > 0):
                starts.append((centre + r * rel / norm - anchors).reshape(-1))
    vals = [objective(x) for x in starts]
    x0 = starts[int(np.argmin(vals))]
    f0 = min(vals)
    best = x0
    start = build(x0)
    exact = float(point_circle_distance(pts, start).mean()) <= 1e-5 * start.radius
    if len(pts) > 3 and not exact:
        scale = max(float(np.linalg.norm(anchors[0] - anchors[1])), 1e-12)
        step = 0.01 * scale
        simplex = np.vstack([x0] + [x0 + step * np.eye(9)[i] for i in range(9)])
        res = minimize(objective, x0, method="Nelder-Mead",
                       options={"initial_simplex": simplex, "xatol": 1e-10 * scale,
                                "fatol": 1e-13 * scale, "maxfev": cfg.maxfev})
        if res.fun < f0:
            best = res.x
    circle = build(best)
    residual = float(point_circle_distance(pts, circle).mean())
    cov = circle_coverage(circle, pts, cfg.coverage_bins)
    return ClosedProposal(int(seed), members, pts.copy(), anchors.copy(), best.reshape(3, 3).copy(),
                          circle, residual, cov, confidence_score(cov, residual, circle.radius))


def iou_labels(members: np.ndarray, segment: np.ndarray) -> float:
    a, b = set(np.asarray(members).tolist()), set(np.asarray(segment).tolist())
    union = len(a | b)
    return len(a & b) / union if union else 0.0


def confidence_label(members: np.ndarray, gt_segment: np.ndarray) -> float:
    """Training-style target: 1 when the proposal's IoU with its true segment exceeds 0.5."""
    return 1.0 if iou_labels(members, gt_segment) > 0.5 else 0.0


def generate_closed_proposals(edge_pos: np.ndarray, F: np.ndarray, cfg: ClosedConfig = ClosedConfig(),
                              allowed: Optional[np.ndarray] = None) -> list[ClosedProposal]:
    """Fit every row proposal; rows with identical member sets share one fit (lowest seed)."""
    if len(edge_pos) == 0:
        return []
    S = build_similarity(F)
    rows = extract_clusters(S, cfg, allowed)
    fitted: dict[bytes, Optional[ClosedProposal]] = {}
    out = []
    for seed, members in rows:
        key = members.tobytes()
        if key not in fitted:
            try:
                fitted[key] = fit_closed_circle(members, seed, edge_pos, cfg)
            except (ClosedProposalError, GeometryError):
                fitted[key] = None
        if fitted[key] is not None:
            out.append(fitted[key])
    # one entry per distinct member set
    seen, unique = set(), []
    for p in out:
        if id(p) not in seen:
            seen.add(id(p))
            unique.append(p)
    return unique


# --------------------------------------------------------------------------- #
# Composite loss
# --------------------------------------------------------------------------- #


def closed_loss(S: np.ndarray, proposals: Sequence[ClosedProposal], gt_ids: np.ndarray, gt_curves: dict,
                K: float = 100.0, samples: int = 64) -> float:
    """Similarity loss + squared confidence error + Chamfer parameter loss, all summed.

    Each proposal is matched to the ground-truth curve with the largest IoU;
    the parameter term only counts when that curve is a closed circle.
    """
    ids = np.asarray(gt_ids).reshape(-1)
    if len(ids) != len(S):
        raise LengthMismatch("labels and similarity disagree in size")
    total = similarity_loss(S, ids, K)
    for p in proposals:
        best_id, best_iou = None, 0.0
        for cid in sorted(gt_curves):
            seg = np.flatnonzero(ids == cid)
            v = iou_labels(p.members, seg)
            if v > best_iou:
                best_id, best_iou = cid, v
        target = 1.0 if best_iou > 0.5 else 0.0
        total += (p.confidence - target) ** 2
        if best_id is not None and target == 1.0:
            truth = gt_curves[best_id]
            if truth.kind == "circle" and truth.closed:
                total += chamfer_distance(canonical_samples(p.circle, samples), canonical_samples(truth, samples))
    return float(total)
