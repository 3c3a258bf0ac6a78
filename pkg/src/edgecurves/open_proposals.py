"""Open-curve proposals: one line / arc / B-spline per corner pair.

Each pair gathers the detected edge points inside the pair's sphere, then every
curve type is fitted by alternating two steps: fit the curve to the current
members with both ends pinned to the corners, then keep only the points within
``segment_tol`` of the fitted curve. The type with the smallest Chamfer cost wins,
with ties going to the simpler type.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

from ._kernels import arc_fit_cost, bezier_arclength_samples, bezier_fit_cost, nn_mean
from .detection import Corner
from .geometry import (
    CircleCanonical,
    CubicBSpline,
    Curve,
    GeometryError,
    LineSegment,
    _BEZIER_TO_POWER,
    _bernstein,
    bspline_parameters,
    chamfer_distance,
    circle_arc_through,
    distance_to_curve,
)

TYPES = ("line", "circle", "bspline")  # simplest first; order is the tie-break
EXACT_RTOL = 1e-5  # residuals below this share of R count as exact (float32 input included)


class ProposalError(ValueError):
    pass


class TooFewCorners(ProposalError):
    pass


class EmptyMembers(ProposalError):
    pass


class DegenerateFit(ProposalError):
    pass


class LowCoverage(ProposalError):
    pass


class NoMatchingGtCurve(ProposalError):
    pass


@dataclass(frozen=True)
class ProposalConfig:
    radius_scale: float = 1.0
    sample_K: int = 64
    segment_tol: float = 0.03  # fraction of the pair radius R
    em_iters: int = 3
    w_m: float = 1.0
    w_c: float = 1.0
    w_p: float = 10.0
    sampling: str = "fps"  # or "random"
    min_coverage: float = 0.7  # 1 - largest uncovered fraction of the curve
    hypotheses: int = 10  # anchor points used to seed arc and spline fits
    early_exit: float = 0.8  # skip refinement when the best hypothesis covers less than this share of min_coverage
    max_residual_ratio: float = 0.03  # valid fits keep mean residual below this share of the tolerance...
    scatter_factor: float = 2.0  # ...or below this multiple of the members' local scatter
    scatter_k: int = 10
    min_members: int = 8
    corner_clearance: float = 0.2  # other corners must stay this many R away from the curve
    type_tie_rtol: float = 0.1
    cost_samples: int = 64
    seed: int = 0

    def __post_init__(self):
        if self.radius_scale < 1:
            raise ValueError("radius_scale must be >= 1")
        if self.sample_K < 8:
            raise ValueError("sample_K must be >= 8")
        if self.em_iters < 1:
            raise ValueError("em_iters must be >= 1")
        if self.sampling not in ("fps", "random"):
            raise ValueError(f"unknown sampling mode {self.sampling!r}")


@dataclass(frozen=True)
class CornerPair:
    index: int
    first: int  # positions in the corner list
    second: int
    c1: np.ndarray
    c2: np.ndarray
    c1_index: int = -1  # source point indices
    c2_index: int = -1

    def __post_init__(self):
        if np.array_equal(self.c1, self.c2):
            raise ProposalError("corner pair endpoints coincide")

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.c1 + self.c2)

    @property
    def radius(self) -> float:
        return 0.5 * float(np.linalg.norm(self.c1 - self.c2))


@dataclass
class TypeFit:
    kind: str
    curve: Curve
    members: np.ndarray  # local indices into the sphere subsample
    residual: float  # mean member-to-curve distance
    cost: float  # two-sided Chamfer cost on the final members
    coverage: float
    history: list = field(default_factory=list)


@dataclass
class OpenProposal:
    pair: CornerPair
    candidates: np.ndarray  # indices into the edge set E (the sphere subsample)
    members: np.ndarray  # indices into E
    kind: str
    curve: Curve
    fit_residual: float
    cost: float
    coverage: float
    fits: dict = field(default_factory=dict)
    proposal_loss: Optional[float] = None


# --------------------------------------------------------------------------- #
# Pairs and sphere sampling
# --------------------------------------------------------------------------- #


def enumerate_pairs(corners: Sequence[Corner]) -> list[CornerPair]:
    if len(corners) < 2:
        raise TooFewCorners(f"{len(corners)} corners, need at least 2")
    pairs = []
    for k, (i, j) in enumerate(combinations(range(len(corners)), 2)):
        a, b = corners[i], corners[j]
        pairs.append(CornerPair(k, i, j, np.asarray(a.position, float), np.asarray(b.position, float),
                                a.index, b.index))
    return pairs


def farthest_point_sampling(points: np.ndarray, k: int, start: int) -> np.ndarray:
    """Greedy FPS returning ``k`` indices, beginning with ``start``; ties go to the lower index."""
    n = len(points)
    if k >= n:
        return np.arange(n)
    chosen = [start]
    dist = np.linalg.norm(points - points[start], axis=1)
    for _ in range(k - 1):
        nxt = int(np.argmax(dist))
        chosen.append(nxt)
        dist = np.minimum(dist, np.linalg.norm(points - points[nxt], axis=1))
    return np.array(chosen)


def sphere_subsample(edge_pos: np.ndarray, pair: CornerPair, cfg: ProposalConfig = ProposalConfig(),
                     rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Indices (sorted) of at most ``sample_K`` edge points inside the pair's sphere."""
    if len(edge_pos) == 0:
        return np.zeros(0, dtype=int)
    d = np.linalg.norm(edge_pos - pair.center, axis=1)
    inside = np.flatnonzero(d <= cfg.radius_scale * pair.radius)
    if len(inside) <= cfg.sample_K:
        return inside
    if cfg.sampling == "random":
        rng = rng if rng is not None else np.random.default_rng(cfg.seed + pair.index)
        return np.sort(rng.choice(inside, cfg.sample_K, replace=False))
    pts = edge_pos[inside]
    start = int(np.argmin(np.linalg.norm(pts - pair.c1, axis=1)))
    return np.sort(inside[farthest_point_sampling(pts, cfg.sample_K, start)])


# --------------------------------------------------------------------------- #
# Costs
# --------------------------------------------------------------------------- #


def _nn_mean(src: np.ndarray, dst: np.ndarray) -> float:
    return float(nn_mean(np.ascontiguousarray(src), np.ascontiguousarray(dst)))


def fit_cost(curve: Curve, members: np.ndarray, samples: int = 64) -> float:
    """Chamfer cost between a curve and a member set.

    The member-to-curve term uses exact point-to-curve distances and the
    curve-to-member term uses ``samples`` evenly spaced curve samples.
    """
    if isinstance(curve, CubicBSpline):
        coef = np.ascontiguousarray(_BEZIER_TO_POWER @ curve.control)
        return float(bezier_fit_cost(np.ascontiguousarray(members, dtype=float), coef, samples, 17, 5))
    return float(distance_to_curve(members, curve).mean()) + _nn_mean(arclength_samples(curve, samples), members)


def arclength_samples(curve: Curve, m: int) -> np.ndarray:
    """Samples evenly spaced by arc length (B-splines are resampled from a dense polyline)."""
    if not isinstance(curve, CubicBSpline):
        return curve.sample(m)
    return bezier_arclength_samples(np.ascontiguousarray(_BEZIER_TO_POWER @ curve.control), m)


def coverage(curve: Curve, members: np.ndarray, samples: int = 129) -> float:
    """One minus the largest fraction of the curve's length left without members.

    Members are located by their nearest of ``samples`` curve samples; both
    curve ends count as covered since the corners pin them.
    """
    if len(members) == 0:
        return 0.0
    dense = curve.sample(samples)
    cum = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(dense, axis=0), axis=1))])
    if cum[-1] <= 0:
        return 0.0
    s = cum[np.argmin(cdist(members, dense, "sqeuclidean"), axis=1)] / cum[-1]
    s = np.concatenate([[0.0], np.sort(s), [1.0]])
    return float(1.0 - np.diff(s).max())


# --------------------------------------------------------------------------- #
# Per-type fitting
# --------------------------------------------------------------------------- #


def _bisector_frame(pair: CornerPair):
    d = pair.c2 - pair.c1
    d = d / np.linalg.norm(d)
    axis = np.zeros(3)
    axis[int(np.argmin(np.abs(d)))] = 1.0
    e1 = axis - (axis @ d) * d
    e1 /= np.linalg.norm(e1)
    return d, e1, np.cross(d, e1)


def _arc_from_offset(pair: CornerPair, xy, frame) -> Curve:
    _, e1, e2 = frame
    q = pair.center + xy[0] * e1 + xy[1] * e2
    if math.hypot(xy[0], xy[1]) <= 1e-9 * pair.radius:
        return LineSegment(pair.c1, pair.c2)
    try:
        return circle_arc_through(pair.c1, q, pair.c2)
    except GeometryError:
        return LineSegment(pair.c1, pair.c2)


def _fit_arc(pair: CornerPair, members: np.ndarray, prev: Optional[Curve], cfg: ProposalConfig,
             polish: bool = True) -> Curve:
    frame = _bisector_frame(pair)
    d, e1, e2 = frame
    if isinstance(prev, CircleCanonical):
        lo, hi = prev.arc_range
        q = prev.point_at(0.5 * (lo + hi))[0]
    else:
        rel = members - pair.center
        along = rel @ d
        perp = rel - np.outer(along, d)
        q = pair.center + perp[int(np.argmax(np.linalg.norm(perp, axis=1)))]
    x0 = np.array([(q - pair.center) @ e1, (q - pair.center) @ e2])
    if not polish:
        return _arc_from_offset(pair, x0, frame)
    R = pair.radius
    step = 0.05 * R
    simplex = np.array([x0, x0 + [step, 0.0], x0 + [0.0, step]])

    pts = np.ascontiguousarray(members, dtype=float)

    def objective(xy):
        if math.hypot(xy[0], xy[1]) > 1e-9 * R:
            value = arc_fit_cost(pts, pair.c1, pair.center + xy[0] * e1 + xy[1] * e2, pair.c2, cfg.cost_samples)
            if value >= 0.0:
                return value
        return fit_cost(_arc_from_offset(pair, xy, frame), members, cfg.cost_samples)

    res = minimize(objective, x0, method="Nelder-Mead",
                   options={"initial_simplex": simplex, "xatol": 1e-9 * R, "fatol": 1e-12 * R,
                            "maxfev": 300})
    best = res.x if res.fun <= objective(x0) else x0
    return _arc_from_offset(pair, best, frame)


def _spline_least_squares(pair: CornerPair, members: np.ndarray, iters: int = 4,
                          start: Optional[CubicBSpline] = None) -> CubicBSpline:
    """Interior control points by linear least squares with parameter correction."""
    c1, c2 = pair.c1, pair.c2
    d = c2 - c1
    if start is None:
        t = np.clip((members - c1) @ d / (d @ d), 0.0, 1.0)
        ctrl = np.stack([c1, c1 + d / 3.0, c1 + 2.0 * d / 3.0, c2])
    else:
        t = bspline_parameters(members, start)
        ctrl = start.control
    for _ in range(iters):
        b, db, ddb = _bernstein(t)
        rhs = members - np.outer(b[:, 0], c1) - np.outer(b[:, 3], c2)
        A = b[:, 1:3]
        if len(members) >= 2 and np.linalg.matrix_rank(A) == 2:
            sol, *_ = np.linalg.lstsq(A, rhs, rcond=None)
            ctrl = np.stack([c1, sol[0], sol[1], c2])
        # re-project members onto the current curve
        for _ in range(3):
            b, db, ddb = _bernstein(t)
            r = b @ ctrl - members
            dc = db @ ctrl
            g = np.einsum("ij,ij->i", r, dc)
            h = np.einsum("ij,ij->i", dc, dc) + np.einsum("ij,ij->i", r, ddb @ ctrl)
            t = np.clip(t - np.where(h > 0, g / np.where(h > 0, h, 1.0), 0.0), 0.0, 1.0)
    return CubicBSpline(ctrl)


def _fit_bspline(pair: CornerPair, members: np.ndarray, prev: Optional[Curve], cfg: ProposalConfig,
                 polish: bool = True) -> CubicBSpline:
    init = _spline_least_squares(pair, members, start=prev if isinstance(prev, CubicBSpline) else None)
    if isinstance(prev, CubicBSpline):
        if fit_cost(prev, members, cfg.cost_samples) < fit_cost(init, members, cfg.cost_samples):
            init = prev
    if not polish:
        return init
    c1, c2 = pair.c1, pair.c2

    def build(x):
        return CubicBSpline(np.stack([c1, x[:3], x[3:], c2]))

    def objective(x):
        return fit_cost(build(x), members, cfg.cost_samples)

    x0 = np.concatenate([init.control[1], init.control[2]])
    step = 0.02 * pair.radius
    simplex = np.vstack([x0] + [x0 + step * np.eye(6)[i] for i in range(6)])
    res = minimize(objective, x0, method="Nelder-Mead",
                   options={"initial_simplex": simplex, "xatol": 1e-9 * pair.radius,
                            "fatol": 1e-12 * pair.radius, "maxfev": 400})
    return build(res.x) if res.fun <= objective(x0) else init


def _fit_once(kind: str, pair: CornerPair, members: np.ndarray, prev: Optional[Curve],
              cfg: ProposalConfig, polish: bool = True) -> Curve:
    if kind == "line":
        return LineSegment(pair.c1, pair.c2)
    if kind == "circle":
        return _fit_arc(pair, members, prev, cfg, polish)
    return _fit_bspline(pair, members, prev, cfg, polish)


def _hypotheses(kind: str, pair: CornerPair, pts: np.ndarray, cfg: ProposalConfig) -> list:
    """Candidate curves through both corners, each pinned by one or two sample points."""
    R = pair.radius
    away = np.flatnonzero((np.linalg.norm(pts - pair.c1, axis=1) > 0.05 * R)
                          & (np.linalg.norm(pts - pair.c2, axis=1) > 0.05 * R))
    if len(away) == 0:
        return []
    start = int(np.argmin(np.linalg.norm(pts[away] - pair.c1, axis=1)))
    anchors = away[farthest_point_sampling(pts[away], cfg.hypotheses, start)]
    out = []
    if kind == "circle":
        for i in anchors:
            try:
                out.append(circle_arc_through(pair.c1, pts[i], pair.c2))
            except GeometryError:
                continue
        return out
    out.append(_spline_least_squares(pair, pts))
    d = pair.c2 - pair.c1
    along = (pts[anchors] - pair.c1) @ d
    order = anchors[np.argsort(along, kind="stable")]
    for a, b in combinations(order, 2):
        p, q = pts[a], pts[b]
        la, lb, lc = (np.linalg.norm(p - pair.c1), np.linalg.norm(q - p), np.linalg.norm(pair.c2 - q))
        total = la + lb + lc
        t = np.array([la / total, (la + lb) / total])
        basis, _, _ = _bernstein(t)
        A = basis[:, 1:3]
        if abs(np.linalg.det(A)) < 1e-9:
            continue
        rhs = np.stack([p, q]) - np.outer(basis[:, 0], pair.c1) - np.outer(basis[:, 3], pair.c2)
        sol = np.linalg.solve(A, rhs)
        out.append(CubicBSpline(np.stack([pair.c1, sol[0], sol[1], pair.c2])))
    return out


def _best_hypothesis(hyps: list, pts: np.ndarray, tol: float):
    """Hypothesis with the best coverage, then most inliers, then lowest inlier residual."""
    best, best_key = None, None
    for h in hyps:
        dist = distance_to_curve(pts, h)
        inl = dist < tol
        if not inl.any():
            continue
        key = (round(coverage(h, pts[inl]), 9), int(inl.sum()), -float(dist[inl].mean()))
        if best_key is None or key > best_key:
            best, best_key = h, key
    return best, best_key


def fit_type(kind: str, pair: CornerPair, pts: np.ndarray, cfg: ProposalConfig = ProposalConfig()) -> TypeFit:
    """Alternate fit and re-segmentation for one curve type.

    Arcs and splines start from the best of a set of hypotheses through sample
    points, fitted on that hypothesis' inliers. An iteration is kept only if it
    does not raise the member residual, so the residual history is
    non-increasing and the final members are the re-segmented set of the final
    curve.
    """
    tol = cfg.segment_tol * pair.radius
    curve = None
    members = np.arange(len(pts))
    history: list[float] = []
    if kind != "line":
        hyp, key = _best_hypothesis(_hypotheses(kind, pair, pts, cfg), pts, 2.0 * tol)
        if hyp is None:
            raise EmptyMembers(f"no {kind} hypothesis keeps any point")
        dist = distance_to_curve(pts, hyp)
        members = np.flatnonzero(dist < 2.0 * tol)
        tight = np.flatnonzero(dist < tol)
        exact = len(tight) > 0 and float(dist[tight].mean()) <= EXACT_RTOL * pair.radius
        hopeless = key[0] < cfg.early_exit * cfg.min_coverage or key[1] < cfg.min_members
        if hopeless or exact:
            # nothing to gain from the local search
            if len(tight) == 0:
                raise EmptyMembers(f"no member survives segmentation for {kind}")
            resid = float(dist[tight].mean())
            return TypeFit(kind, hyp, tight, resid, fit_cost(hyp, pts[tight], cfg.cost_samples),
                           coverage(hyp, pts[tight]), [resid])
        curve = hyp
    for _ in range(cfg.em_iters):
        new_curve = _fit_once(kind, pair, pts[members], curve, cfg)
        dist = distance_to_curve(pts, new_curve)
        new_members = np.flatnonzero(dist < tol)
        if len(new_members) == 0:
            if not history:
                raise EmptyMembers(f"no member survives segmentation for {kind}")
            break
        resid = float(dist[new_members].mean())
        if history and resid > history[-1]:
            break
        converged = bool(history) and np.array_equal(new_members, members)
        curve, members = new_curve, new_members
        history.append(resid)
        if converged or kind == "line":
            break
    cost = fit_cost(curve, pts[members], cfg.cost_samples)
    return TypeFit(kind, curve, members, history[-1], cost, coverage(curve, pts[members]), history)


def choose_type(fits: dict, rtol: float) -> str:
    """Simplest type whose cost is within ``rtol`` of the best one."""
    best = min(f.cost for f in fits.values())
    for kind in TYPES:
        if kind in fits and fits[kind].cost <= best * (1.0 + rtol) + 1e-12:
            return kind
    raise AssertionError("unreachable")


def local_scatter(edge_pos: np.ndarray, k: int = 10) -> np.ndarray:
    """RMS distance of each point's k-neighbourhood to its principal line."""
    n = len(edge_pos)
    if n < 3:
        return np.zeros(n)
    k = min(k, n)
    _, nn = cKDTree(edge_pos).query(edge_pos, k=k)
    nb = edge_pos[nn] - edge_pos[nn].mean(axis=1, keepdims=True)
    ev = np.linalg.eigvalsh(np.einsum("nki,nkj->nij", nb, nb) / k)
    return np.sqrt(np.maximum(ev[:, 0] + ev[:, 1], 0.0))


def _clear_of_corners(curve: Curve, others: Optional[np.ndarray], limit: float) -> bool:
    if others is None or len(others) == 0:
        return True
    return bool(distance_to_curve(others, curve).min() >= limit)


def fit_open_curve(pair: CornerPair, candidates: np.ndarray, edge_pos: np.ndarray,
                   cfg: ProposalConfig = ProposalConfig(), gt=None,
                   other_corners: Optional[np.ndarray] = None,
                   scatter: float = 0.0) -> OpenProposal:
    """Best open curve for a corner pair from its sphere subsample ``candidates`` (indices into E).

    Only fits whose members cover at least ``min_coverage`` of the curve, with a
    mean residual under ``max_residual_ratio`` of the tolerance (or under
    ``scatter_factor`` times the scene's median local ``scatter``, for noisy
    input), compete for the type; a pair with no such fit is rejected. Corners are curve junctions, so a
    fit passing within ``corner_clearance * R`` of ``other_corners`` is invalid too.
    """
    candidates = np.asarray(candidates, dtype=int)
    if len(candidates) == 0:
        raise EmptyMembers("empty sphere subsample")
    pts = edge_pos[candidates]
    fits = {}
    for kind in TYPES:
        try:
            f = fit_type(kind, pair, pts, cfg)
        except (EmptyMembers, DegenerateFit):
            continue
        if kind == "circle" and isinstance(f.curve, LineSegment):
            continue  # collapsed arc, already covered by the line fit
        fits[kind] = f
        # an exact, fully covered fit cannot be beaten by more than the tie margin
        if f.residual <= EXACT_RTOL * pair.radius and f.coverage >= cfg.min_coverage and kind == "line":
            break
    base_resid = cfg.max_residual_ratio * cfg.segment_tol * pair.radius
    clearance = cfg.corner_clearance * pair.radius

    def ok(f: TypeFit) -> bool:
        limit = max(base_resid, cfg.scatter_factor * scatter)
        return (len(f.members) >= cfg.min_members and f.coverage >= cfg.min_coverage and f.residual <= limit
                and _clear_of_corners(f.curve, other_corners, clearance))

    valid = {k: f for k, f in fits.items() if ok(f)}
    if not valid:
        raise LowCoverage("no curve type covers the pair tightly enough")
    kind = choose_type(valid, cfg.type_tie_rtol)
    f = valid[kind]
    prop = OpenProposal(pair, candidates, candidates[f.members], kind, f.curve, f.residual, f.cost,
                        f.coverage, fits)
    if gt is not None:
        prop.proposal_loss = proposal_loss_eval(prop, gt, cfg)
    return prop


def generate_open_proposals(corners: Sequence[Corner], edge_pos: np.ndarray,
                            cfg: ProposalConfig = ProposalConfig(), gt=None) -> list[OpenProposal]:
    """Proposals for every corner pair, ordered by pair index; rejected pairs are skipped."""
    if len(corners) < 2:
        return []
    out = []
    positions = np.array([np.asarray(c.position, float) for c in corners])
    scatter = float(np.median(local_scatter(edge_pos, cfg.scatter_k)))
    for pair in enumerate_pairs(corners):
        cand = sphere_subsample(edge_pos, pair, cfg)
        if len(cand) == 0:
            continue
        others = np.delete(positions, [pair.first, pair.second], axis=0)
        try:
            out.append(fit_open_curve(pair, cand, edge_pos, cfg, gt, others, scatter))
        except (ProposalError, GeometryError):
            continue
    return out


# --------------------------------------------------------------------------- #
# Supervision loss
# --------------------------------------------------------------------------- #


@dataclass(frozen=True)
class OpenGroundTruth:
    """Ground-truth context for proposal losses.

    ``curves`` maps curve id to curve; ``edge_curve_id`` gives the true curve id of
    every point in the edge set E (-1 when none).
    """

    curves: dict
    edge_curve_id: np.ndarray
    match_tol: float = 0.1  # fraction of the pair radius


def match_gt_curve(pair: CornerPair, gt: OpenGroundTruth) -> int:
    tol = gt.match_tol * pair.radius
    best, best_err = None, math.inf
    for cid in sorted(gt.curves):
        curve = gt.curves[cid]
        if curve.closed:
            continue
        a, b = curve.endpoints
        err = min(max(np.linalg.norm(a - pair.c1), np.linalg.norm(b - pair.c2)),
                  max(np.linalg.norm(a - pair.c2), np.linalg.norm(b - pair.c1)))
        if err < best_err:
            best, best_err = cid, err
    if best is None or best_err > tol:
        raise NoMatchingGtCurve(f"no ground-truth curve joins corners {pair.first} and {pair.second}")
    return best


def curve_kind(curve: Curve) -> str:
    return curve.kind


def proposal_loss_eval(prop: OpenProposal, gt: OpenGroundTruth, cfg: ProposalConfig = ProposalConfig(),
                       samples: int = 64) -> float:
    """``w_m * L_mask + w_c * L_cls + w_p * L_para`` with indicator surrogates.

    L_mask is the fraction of sphere points whose membership disagrees with the
    ground truth, L_cls is 1 for a wrong type, and L_para is the Chamfer distance
    between the fit of the true type and the true curve.
    """
    cid = match_gt_curve(prop.pair, gt)
    true_curve = gt.curves[cid]
    true_kind = curve_kind(true_curve)
    truth_mask = gt.edge_curve_id[prop.candidates] == cid
    pred_mask = np.isin(prop.candidates, prop.members)
    l_mask = float(np.mean(truth_mask != pred_mask))
    l_cls = 0.0 if prop.kind == true_kind else 1.0
    fitted = prop.fits[true_kind].curve if true_kind in prop.fits else prop.curve
    l_para = chamfer_distance(fitted.sample(samples), true_curve.sample(samples))
    return cfg.w_m * l_mask + cfg.w_c * l_cls + cfg.w_p * l_para
