"""Parametric curve types, samplers, point-to-curve distances and Chamfer distance.

Points are plain ``numpy`` arrays: a single point has shape ``(3,)``, a point
set has shape ``(n, 3)``. Curve objects are frozen dataclasses and safe to share.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Union

import numpy as np
from scipy.spatial import cKDTree

from ._kernels import bezier_distances, bezier_project

TWO_PI = 2.0 * math.pi


class GeometryError(ValueError):
    pass


class CollinearPoints(GeometryError):
    pass


class DuplicatePoints(GeometryError):
    pass


class EmptySet(GeometryError):
    pass


def as_points(points) -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, 3)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError(f"expected an (n, 3) point array, got shape {arr.shape}")
    return arr


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


# --------------------------------------------------------------------------- #
# Point clouds
# --------------------------------------------------------------------------- #


@dataclass(frozen=True)
class PointCloud:
    points: np.ndarray
    bbox_diagonal: float = field(init=False)

    def __post_init__(self):
        pts = as_points(self.points)
        if len(pts) == 0:
            raise EmptySet("point cloud must be non-empty")
        if not np.all(np.isfinite(pts)):
            raise ValueError("point coordinates must be finite")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "bbox_diagonal", bbox_diagonal(pts))

    def __len__(self) -> int:
        return len(self.points)


def bbox_diagonal(points: np.ndarray) -> float:
    pts = as_points(points)
    return float(np.linalg.norm(pts.max(axis=0) - pts.min(axis=0)))


# --------------------------------------------------------------------------- #
# Curve types
# --------------------------------------------------------------------------- #


@dataclass(frozen=True)
class LineSegment:
    a: np.ndarray
    b: np.ndarray

    kind = "line"
    closed = False

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float).reshape(3)
        b = np.asarray(self.b, dtype=float).reshape(3)
        if np.array_equal(a, b):
            raise DuplicatePoints("line endpoints coincide")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    def sample(self, m: int) -> np.ndarray:
        return sample_line(self, m)

    def length(self) -> float:
        return float(np.linalg.norm(self.b - self.a))

    @property
    def endpoints(self):
        return self.a, self.b


@dataclass(frozen=True)
class CircleCanonical:
    """Circle or circular arc ``c + r (u cos a + v sin a)`` for ``a`` in ``arc_range``."""

    normal: np.ndarray
    center: np.ndarray
    radius: float
    u: np.ndarray
    v: np.ndarray
    arc_range: tuple = (0.0, TWO_PI)
    three_points: Optional[np.ndarray] = None

    kind = "circle"

    def __post_init__(self):
        for name in ("normal", "center", "u", "v"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float).reshape(3))
        lo, hi = (float(x) for x in self.arc_range)
        if not lo < hi:
            raise GeometryError(f"empty arc range [{lo}, {hi}]")
        object.__setattr__(self, "arc_range", (lo, hi))
        object.__setattr__(self, "radius", float(self.radius))
        if self.radius <= 0:
            raise GeometryError("radius must be positive")
        if self.three_points is not None:
            object.__setattr__(self, "three_points", as_points(self.three_points).copy())

    @property
    def closed(self) -> bool:
        lo, hi = self.arc_range
        return lo == 0.0 and hi == TWO_PI

    def sample(self, m: int) -> np.ndarray:
        return sample_circle(self, m)

    def length(self) -> float:
        lo, hi = self.arc_range
        return self.radius * (hi - lo)

    def point_at(self, alpha) -> np.ndarray:
        alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
        return self.center + self.radius * (
            np.outer(np.cos(alpha), self.u) + np.outer(np.sin(alpha), self.v)
        )

    def angles_of(self, points: np.ndarray) -> np.ndarray:
        """Angle in ``[0, 2pi)`` of each point's projection into the circle plane."""
        d = as_points(points) - self.center
        return np.mod(np.arctan2(d @ self.v, d @ self.u), TWO_PI)

    def as_full(self) -> "CircleCanonical":
        return CircleCanonical(self.normal, self.center, self.radius, self.u, self.v,
                               (0.0, TWO_PI), self.three_points)

    @property
    def endpoints(self):
        lo, hi = self.arc_range
        pts = self.point_at([lo, hi])
        return pts[0], pts[1]


@dataclass(frozen=True)
class CubicBSpline:
    """Clamped cubic B-spline with four control points (knots ``[0,0,0,0,1,1,1,1]``)."""

    control: np.ndarray

    kind = "bspline"
    closed = False
    order = 4

    def __post_init__(self):
        ctrl = np.asarray(self.control, dtype=float)
        if ctrl.shape != (4, 3):
            raise GeometryError(f"need exactly four 3D control points, got {ctrl.shape}")
        ctrl = ctrl.copy()
        ctrl.setflags(write=False)
        object.__setattr__(self, "control", ctrl)

    def sample(self, m: int) -> np.ndarray:
        return sample_bspline(self, m)

    def evaluate(self, alpha) -> np.ndarray:
        return bspline_basis(alpha) @ self.control

    def length(self, m: int = 512) -> float:
        pts = self.sample(m)
        return float(np.linalg.norm(np.diff(pts, axis=0), axis=1).sum())

    @property
    def endpoints(self):
        return self.control[0], self.control[3]


Curve = Union[LineSegment, CircleCanonical, CubicBSpline]


# --------------------------------------------------------------------------- #
# Circles
# --------------------------------------------------------------------------- #


def circle_from_three_points(p1, p2, p3) -> CircleCanonical:
    """Circumscribed circle of three points, with ``u`` pointing at ``p1``."""
    p1, p2, p3 = (np.asarray(p, dtype=float).reshape(3) for p in (p1, p2, p3))
    d12 = np.linalg.norm(p1 - p2)
    d13 = np.linalg.norm(p1 - p3)
    d23 = np.linalg.norm(p2 - p3)
    if min(d12, d13, d23) == 0.0:
        raise DuplicatePoints("circle needs three distinct points")
    a = p1 - p3
    b = p2 - p3
    axb = np.cross(a, b)
    cross_sq = float(axb @ axb)
    area = 0.5 * math.sqrt(cross_sq)
    if area <= 1e-9 * max(d12, d13, d23) ** 2:
        raise CollinearPoints("points are collinear")
    center = p3 + np.cross((a @ a) * b - (b @ b) * a, axb) / (2.0 * cross_sq)
    n = axb / math.sqrt(cross_sq)
    radial = p1 - center
    radius = float(np.linalg.norm(radial))
    u = radial / radius
    v = np.cross(u, n)
    return CircleCanonical(n, center, radius, u, v, (0.0, TWO_PI), np.stack([p1, p2, p3]))


def circle_arc_through(c1, mid, c2) -> CircleCanonical:
    """Arc starting at ``c1``, passing through ``mid`` and ending at ``c2``."""
    full = circle_from_three_points(c1, mid, c2)
    a_mid, a_end = full.angles_of(np.stack([mid, c2]))
    if a_mid < a_end:
        rng = (0.0, float(a_end))
    else:
        # the arc through mid runs the other way round: from c2 up to c1 at 2pi
        rng = (float(a_end), TWO_PI)
    return CircleCanonical(full.normal, full.center, full.radius, full.u, full.v, rng,
                           full.three_points)


def sample_circle(circle: CircleCanonical, m: int) -> np.ndarray:
    if m < 1:
        raise ValueError("need at least one sample")
    lo, hi = circle.arc_range
    if circle.closed:
        alpha = lo + (hi - lo) * np.arange(m) / m
    elif m == 1:
        alpha = np.array([lo])
    else:
        alpha = np.linspace(lo, hi, m)
    return circle.point_at(alpha)


def canonical_circle_frame(normal: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal in-plane frame determined by the normal's line only (sign-free)."""
    n = _unit(np.asarray(normal, dtype=float))
    axis = np.zeros(3)
    axis[int(np.argmin(np.abs(n)))] = 1.0
    u = _unit(axis - (axis @ n) * n)
    v = np.cross(n, u)
    if n[int(np.argmax(np.abs(n)))] < 0:
        v = -v
    return u, v


def canonical_samples(curve, m: int) -> np.ndarray:
    """Samples that depend only on the curve's point set, not on its parameterisation.

    Full circles restart from a phase fixed by the normal's line; other curves
    are sampled as usual.
    """
    if getattr(curve, "kind", None) == "circle" and curve.closed:
        u, v = canonical_circle_frame(curve.normal)
        return CircleCanonical(np.cross(u, v), curve.center, curve.radius, u, v).sample(m)
    return curve.sample(m)


# --------------------------------------------------------------------------- #
# B-splines
# --------------------------------------------------------------------------- #

CLAMPED_KNOTS = np.array([0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0])


def bspline_basis(alpha, knots: np.ndarray = CLAMPED_KNOTS, order: int = 4) -> np.ndarray:
    """Cox-de Boor basis values, shape ``(len(alpha), n_ctrl)``.

    The right end of the domain is closed, so ``alpha = 1`` evaluates to the last
    control point.
    """
    t = np.atleast_1d(np.asarray(alpha, dtype=float))
    knots = np.asarray(knots, dtype=float)
    n_ctrl = len(knots) - order
    last = knots[-1]
    # order-1 basis: half-open spans, with the final non-empty span closed on the right
    span_end = max(i for i in range(len(knots) - 1) if knots[i] < knots[i + 1])
    basis = np.zeros((len(t), len(knots) - 1))
    for i in range(len(knots) - 1):
        if knots[i] < knots[i + 1]:
            inside = (t >= knots[i]) & (t < knots[i + 1])
            if i == span_end:
                inside |= t == last
            basis[:, i] = inside
    for k in range(2, order + 1):
        nxt = np.zeros((len(t), len(knots) - k))
        for i in range(len(knots) - k):
            left_den = knots[i + k - 1] - knots[i]
            right_den = knots[i + k] - knots[i + 1]
            if left_den > 0:
                nxt[:, i] += (t - knots[i]) / left_den * basis[:, i]
            if right_den > 0:
                nxt[:, i] += (knots[i + k] - t) / right_den * basis[:, i + 1]
        basis = nxt
    return basis[:, :n_ctrl]


@lru_cache(maxsize=64)
def _uniform_basis(m: int) -> np.ndarray:
    basis = bspline_basis(np.linspace(0.0, 1.0, m))
    basis.setflags(write=False)
    return basis


def sample_bspline(spline: CubicBSpline, m: int) -> np.ndarray:
    if m < 2:
        raise ValueError("need at least two samples")
    pts = _uniform_basis(m) @ spline.control
    # clamped ends interpolate exactly; pin them to dodge rounding in the basis sums
    pts[0] = spline.control[0]
    pts[-1] = spline.control[3]
    return pts


# --------------------------------------------------------------------------- #
# Lines
# --------------------------------------------------------------------------- #


def sample_line(line: LineSegment, m: int) -> np.ndarray:
    if m < 2:
        raise ValueError("need at least two samples")
    t = np.linspace(0.0, 1.0, m)[:, None]
    pts = line.a + t * (line.b - line.a)
    pts[-1] = line.b
    return pts


# --------------------------------------------------------------------------- #
# Distances
# --------------------------------------------------------------------------- #


def point_segment_distance(points: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    pts = as_points(points)
    d = b - a
    t = np.clip((pts - a) @ d / (d @ d), 0.0, 1.0)
    return np.linalg.norm(pts - (a + t[:, None] * d), axis=1)


def point_polyline_distance(points: np.ndarray, poly: np.ndarray) -> np.ndarray:
    pts = as_points(points)
    a = poly[:-1]
    d = poly[1:] - a
    dd = np.einsum("ij,ij->i", d, d)
    dd[dd == 0] = 1.0
    rel = pts[:, None, :] - a[None, :, :]
    t = np.clip(np.einsum("pij,ij->pi", rel, d) / dd, 0.0, 1.0)
    diff = rel - t[..., None] * d[None]
    return np.sqrt(np.einsum("pij,pij->pi", diff, diff).min(axis=1))


def point_circle_distance(points: np.ndarray, circle: CircleCanonical) -> np.ndarray:
    """Exact distance to a full circle or to an arc."""
    d = as_points(points) - circle.center
    h = d @ circle.normal
    inplane = d - np.outer(h, circle.normal)
    rho = np.linalg.norm(inplane, axis=1)
    full = np.sqrt(h**2 + (rho - circle.radius) ** 2)
    if circle.closed:
        return full
    lo, hi = circle.arc_range
    ang = np.mod(np.arctan2(d @ circle.v, d @ circle.u), TWO_PI)
    on_arc = (ang >= lo) & (ang <= hi)
    e0, e1 = circle.endpoints
    to_ends = np.minimum(np.linalg.norm(d + circle.center - e0, axis=1),
                         np.linalg.norm(d + circle.center - e1, axis=1))
    return np.where(on_arc, full, to_ends)


def _bernstein(t: np.ndarray):
    s = 1.0 - t
    b = np.stack([s**3, 3 * s * s * t, 3 * s * t * t, t**3], axis=-1)
    db = np.stack([-3 * s * s, 3 * s * s - 6 * s * t, 6 * s * t - 3 * t * t, 3 * t * t], axis=-1)
    ddb = np.stack([6 * s, 6 * t - 12 * s, 6 * s - 12 * t, 6 * t], axis=-1)
    return b, db, ddb


# rows: power-basis coefficients (1, t, t^2, t^3) of the four Bernstein polynomials
_BEZIER_TO_POWER = np.array([
    [1.0, 0.0, 0.0, 0.0],
    [-3.0, 3.0, 0.0, 0.0],
    [3.0, -6.0, 3.0, 0.0],
    [-1.0, 3.0, -3.0, 1.0],
])


def point_bspline_distance(points: np.ndarray, spline: CubicBSpline, coarse: int = 17,
                           newton_steps: int = 5) -> np.ndarray:
    """Distance to a clamped cubic with four control points.

    With this knot vector the curve is a cubic Bezier, so Newton iterations on its
    power-basis form refine a coarse nearest-sample guess to machine precision.
    """
    pts = np.ascontiguousarray(as_points(points))
    coef = np.ascontiguousarray(_BEZIER_TO_POWER @ spline.control)
    return bezier_distances(pts, coef, coarse, newton_steps)


def distance_to_curve(points: np.ndarray, curve: Curve) -> np.ndarray:
    """Point-to-curve distance for any supported curve type."""
    if isinstance(curve, LineSegment):
        return point_segment_distance(points, curve.a, curve.b)
    if isinstance(curve, CircleCanonical):
        return point_circle_distance(points, curve)
    return point_bspline_distance(points, curve)


def project_to_bspline(point: np.ndarray, spline: CubicBSpline, coarse: int = 257) -> tuple[float, np.ndarray]:
    """Closest parameter and foot point on a B-spline (coarse search + Brent refinement)."""
    from scipy.optimize import minimize_scalar

    p = np.asarray(point, dtype=float)
    ts = np.linspace(0.0, 1.0, coarse)
    pts = spline.evaluate(ts)
    k = int(np.argmin(np.linalg.norm(pts - p, axis=1)))
    lo, hi = ts[max(k - 1, 0)], ts[min(k + 1, coarse - 1)]

    def f(t):
        q = spline.evaluate(t)[0]
        return float((q - p) @ (q - p))

    res = minimize_scalar(f, bounds=(lo, hi), method="bounded", options={"xatol": 1e-13})
    cands = [(f(lo), lo), (f(hi), hi), (res.fun, float(res.x))]
    _, t = min(cands)
    return t, spline.evaluate(t)[0]


def project_to_curve(point: np.ndarray, curve: Curve) -> np.ndarray:
    """Exact closest point on ``curve``."""
    p = np.asarray(point, dtype=float).reshape(3)
    if isinstance(curve, LineSegment):
        d = curve.b - curve.a
        t = min(max(float((p - curve.a) @ d / (d @ d)), 0.0), 1.0)
        return curve.a + t * d
    if isinstance(curve, CircleCanonical):
        d = p - curve.center
        inplane = d - (d @ curve.normal) * curve.normal
        norm = np.linalg.norm(inplane)
        if norm == 0:
            foot = curve.center + curve.radius * curve.u
        else:
            foot = curve.center + curve.radius * inplane / norm
        if curve.closed:
            return foot
        ang = float(curve.angles_of(foot[None])[0])
        lo, hi = curve.arc_range
        if lo <= ang <= hi:
            return foot
        e0, e1 = curve.endpoints
        return e0 if np.linalg.norm(p - e0) <= np.linalg.norm(p - e1) else e1
    return project_to_bspline(p, curve)[1]


def project_points_to_curve(points: np.ndarray, curve: Curve) -> np.ndarray:
    """Vectorised :func:`project_to_curve` for many points."""
    pts = as_points(points)
    if isinstance(curve, LineSegment):
        d = curve.b - curve.a
        t = np.clip((pts - curve.a) @ d / (d @ d), 0.0, 1.0)
        return curve.a + np.outer(t, d)
    if isinstance(curve, CircleCanonical):
        d = pts - curve.center
        inplane = d - np.outer(d @ curve.normal, curve.normal)
        norm = np.linalg.norm(inplane, axis=1, keepdims=True)
        radial = np.where(norm > 0, inplane / np.where(norm > 0, norm, 1.0), curve.u)
        foot = curve.center + curve.radius * radial
        if curve.closed:
            return foot
        ang = curve.angles_of(foot)
        lo, hi = curve.arc_range
        e0, e1 = curve.endpoints
        near0 = np.linalg.norm(pts - e0, axis=1) <= np.linalg.norm(pts - e1, axis=1)
        ends = np.where(near0[:, None], e0, e1)
        return np.where(((ang >= lo) & (ang <= hi))[:, None], foot, ends)
    return curve.evaluate(bspline_parameters(pts, curve))


def bspline_parameters(points: np.ndarray, spline: CubicBSpline) -> np.ndarray:
    """Parameter of the closest curve point for every point."""
    coef = np.ascontiguousarray(_BEZIER_TO_POWER @ spline.control)
    return bezier_project(np.ascontiguousarray(as_points(points)), coef, 65, 8)


def curve_length(curve: Curve) -> float:
    return curve.length()


# --------------------------------------------------------------------------- #
# Chamfer distance
# --------------------------------------------------------------------------- #


def _pair_dist(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = a - b
    return np.sqrt(d[..., 0] * d[..., 0] + d[..., 1] * d[..., 1] + d[..., 2] * d[..., 2])


def directed_nn_distances(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Nearest-neighbour distance from every ``src`` point to the set ``dst``.

    The KD-tree only proposes candidates; the reported distance is recomputed with
    the same arithmetic as a brute-force scan, so both routes agree exactly.
    """
    src = as_points(src)
    dst = as_points(dst)
    k = min(3, len(dst))
    _, idx = cKDTree(dst).query(src, k=k)
    idx = np.asarray(idx).reshape(len(src), k)
    return _pair_dist(src[:, None, :], dst[idx]).min(axis=1)


def chamfer_distance(a, b) -> float:
    """Sum of the two directed mean nearest-neighbour distances (non-squared)."""
    a = as_points(a)
    b = as_points(b)
    if len(a) == 0 or len(b) == 0:
        raise EmptySet("chamfer distance needs non-empty point sets")
    ab = math.fsum(directed_nn_distances(a, b)) / len(a)
    ba = math.fsum(directed_nn_distances(b, a)) / len(b)
    return ab + ba


def chamfer_distance_bruteforce(a, b) -> float:
    """O(|a||b|) reference implementation of :func:`chamfer_distance`."""
    a = as_points(a)
    b = as_points(b)
    if len(a) == 0 or len(b) == 0:
        raise EmptySet("chamfer distance needs non-empty point sets")
    d = _pair_dist(a[:, None, :], b[None, :, :])
    return math.fsum(d.min(axis=1)) / len(a) + math.fsum(d.min(axis=0)) / len(b)


# --------------------------------------------------------------------------- #
# Serialisation
# --------------------------------------------------------------------------- #


def _vec(v) -> list:
    return [float(x) for x in np.asarray(v).reshape(-1)]


def curve_to_dict(curve: Curve) -> dict:
    if isinstance(curve, LineSegment):
        return {"kind": "line", "closed": False, "a": _vec(curve.a), "b": _vec(curve.b)}
    if isinstance(curve, CircleCanonical):
        out = {
            "kind": "circle",
            "closed": curve.closed,
            "normal": _vec(curve.normal),
            "center": _vec(curve.center),
            "radius": float(curve.radius),
            "u": _vec(curve.u),
            "v": _vec(curve.v),
            "arc_range": [float(curve.arc_range[0]), float(curve.arc_range[1])],
        }
        if curve.three_points is not None:
            out["three_points"] = [_vec(p) for p in curve.three_points]
        return out
    if isinstance(curve, CubicBSpline):
        return {"kind": "bspline", "closed": False, "control": [_vec(p) for p in curve.control]}
    raise TypeError(f"not a curve: {curve!r}")


def curve_from_dict(data: dict) -> Curve:
    kind = data["kind"]
    if kind == "line":
        return LineSegment(np.array(data["a"]), np.array(data["b"]))
    if kind == "circle":
        three = data.get("three_points")
        return CircleCanonical(
            np.array(data["normal"]), np.array(data["center"]), data["radius"],
            np.array(data["u"]), np.array(data["v"]), tuple(data["arc_range"]),
            None if three is None else np.array(three),
        )
    if kind == "bspline":
        return CubicBSpline(np.array(data["control"]))
    raise ValueError(f"unknown curve kind {kind!r}")
