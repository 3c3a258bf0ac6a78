"""Procedural ground-truth scenes: boxes, cylinders and free wireframes with labelled feature curves.

Surfaces are sampled uniformly by area (wireframes uniformly by length), and
points within a band of a feature curve become edge points whose offsets
project them exactly onto that curve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.transform import Rotation

from .detection import GroundTruthLabels
from .geometry import (
    CircleCanonical,
    CubicBSpline,
    Curve,
    LineSegment,
    PointCloud,
    circle_arc_through,
    distance_to_curve,
    project_points_to_curve,
)
from .open_proposals import farthest_point_sampling

SOLID_KINDS = ("box_union", "cylinder_union", "wireframe_only")


class InfeasibleSpec(ValueError):
    pass


class PTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class CurveBudget:
    lines: int = 12
    arcs: int = 0
    circles: int = 0
    bsplines: int = 0

    def total(self) -> int:
        return self.lines + self.arcs + self.circles + self.bsplines


@dataclass(frozen=True)
class SceneSpec:
    seed: int = 0
    n_points: int = 8096
    curve_budget: CurveBudget = field(default_factory=CurveBudget)
    solid_kind: str = "box_union"
    noise_X: float = 0.0
    band_factor: float = 1.5  # edge band in median point spacings
    corner_band_factor: float = 3.0

    def __post_init__(self):
        if self.n_points < 256:
            raise ValueError("n_points must be at least 256")
        if self.solid_kind not in SOLID_KINDS:
            raise ValueError(f"unknown solid kind {self.solid_kind!r}")
        b = self.curve_budget
        if min(b.lines, b.arcs, b.circles, b.bsplines) < 0 or b.total() < 1:
            raise ValueError("curve budget must be non-negative with at least one curve")
        if self.noise_X < 0:
            raise ValueError("noise_X must be non-negative")


@dataclass(frozen=True)
class SyntheticScene:
    spec: SceneSpec
    cloud: PointCloud
    normals: np.ndarray
    gt: GroundTruthLabels
    curves: tuple  # curve i has id i
    corners: np.ndarray  # (k, 3)

    @property
    def points(self) -> np.ndarray:
        return self.cloud.points

    @property
    def open_curves(self) -> list:
        return [c for c in self.curves if not c.closed]

    @property
    def closed_curves(self) -> list:
        return [c for c in self.curves if c.closed]


# --------------------------------------------------------------------------- #
# Surface patches
# --------------------------------------------------------------------------- #


@dataclass(frozen=True)
class _Rect:
    origin: np.ndarray
    e1: np.ndarray  # full edge vectors
    e2: np.ndarray
    normal: np.ndarray

    @property
    def area(self) -> float:
        return float(np.linalg.norm(np.cross(self.e1, self.e2)))

    def sample(self, rng, m):
        uv = rng.random((m, 2))
        pts = self.origin + np.outer(uv[:, 0], self.e1) + np.outer(uv[:, 1], self.e2)
        return pts, np.tile(self.normal, (m, 1))


@dataclass(frozen=True)
class _Disk:
    center: np.ndarray
    e1: np.ndarray  # unit in-plane axes
    e2: np.ndarray
    normal: np.ndarray
    radius: float

    @property
    def area(self) -> float:
        return math.pi * self.radius**2

    def sample(self, rng, m):
        uv = rng.random((m, 2))
        rho = self.radius * np.sqrt(uv[:, 0])
        th = 2 * math.pi * uv[:, 1]
        pts = self.center + np.outer(rho * np.cos(th), self.e1) + np.outer(rho * np.sin(th), self.e2)
        return pts, np.tile(self.normal, (m, 1))


@dataclass(frozen=True)
class _Tube:
    base: np.ndarray
    axis: np.ndarray  # unit
    e1: np.ndarray
    e2: np.ndarray
    radius: float
    height: float

    @property
    def area(self) -> float:
        return 2 * math.pi * self.radius * self.height

    def sample(self, rng, m):
        uv = rng.random((m, 2))
        th = 2 * math.pi * uv[:, 0]
        radial = np.outer(np.cos(th), self.e1) + np.outer(np.sin(th), self.e2)
        pts = self.base + self.radius * radial + np.outer(uv[:, 1] * self.height, self.axis)
        return pts, radial


@dataclass
class _Layout:
    surfaces: list = field(default_factory=list)
    curves: list = field(default_factory=list)


def _frame(rng) -> np.ndarray:
    return Rotation.random(random_state=rng).as_matrix()


def _perp_frame(n: np.ndarray):
    axis = np.zeros(3)
    axis[int(np.argmin(np.abs(n)))] = 1.0
    e1 = axis - (axis @ n) * n
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(n, e1)


# --------------------------------------------------------------------------- #
# Primitives
# --------------------------------------------------------------------------- #


def box_layout(center, rot, half) -> _Layout:
    """Faces, 12 edges of an oriented box with half extents ``half``."""
    center = np.asarray(center, float)
    ax = [rot[:, i] * half[i] for i in range(3)]
    lay = _Layout()
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        for s in (-1, 1):
            origin = center + s * ax[i] - ax[j] - ax[k]
            lay.surfaces.append(_Rect(origin, 2 * ax[j], 2 * ax[k], s * rot[:, i]))
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        for sj in (-1, 1):
            for sk in (-1, 1):
                base = center + sj * ax[j] + sk * ax[k]
                lay.curves.append(LineSegment(base - ax[i], base + ax[i]))
    return lay


def cylinder_layout(base, axis, radius, height) -> _Layout:
    axis = np.asarray(axis, float) / np.linalg.norm(axis)
    e1, e2 = _perp_frame(axis)
    base = np.asarray(base, float)
    top = base + height * axis
    lay = _Layout()
    lay.surfaces.append(_Tube(base, axis, e1, e2, radius, height))
    lay.surfaces.append(_Disk(base, e1, e2, -axis, radius))
    lay.surfaces.append(_Disk(top, e1, e2, axis, radius))
    for c in (base, top):
        lay.curves.append(CircleCanonical(axis, c, radius, e1, np.cross(e1, axis)))
    return lay


def _embedded_curve(kind: str, rng, origin, e1, e2, within) -> Curve:
    """Random arc or S-shaped B-spline lying in the plane ``origin + x e1 + y e2``.

    ``within(x, y)`` tells whether in-plane coordinates stay clear of the patch border.
    """
    for _ in range(500):
        a = rng.uniform(-1, 1, 2)
        b = rng.uniform(-1, 1, 2)
        if not (within(*a) and within(*b)):
            continue
        chord = np.linalg.norm(b - a)
        if chord < 0.5:
            continue
        d = (b - a) / chord
        perp = np.array([-d[1], d[0]])
        if kind == "arc":
            h = rng.uniform(0.2, 0.4) * chord * rng.choice([-1, 1])
            mid = 0.5 * (a + b) + h * perp
            pts2 = [a, mid, b]
        else:
            s1 = rng.uniform(0.25, 0.4) * chord
            s2 = -rng.uniform(0.25, 0.4) * chord
            pts2 = [a, a + (b - a) / 3 + s1 * perp, a + 2 * (b - a) / 3 + s2 * perp, b]
        to3 = [origin + p[0] * e1 + p[1] * e2 for p in pts2]
        curve = circle_arc_through(*to3) if kind == "arc" else CubicBSpline(np.stack(to3))
        samp = curve.sample(64)
        xy = np.stack([(samp - origin) @ e1 / (e1 @ e1), (samp - origin) @ e2 / (e2 @ e2)], axis=1)
        if not all(within(x, y) for x, y in xy):
            continue
        if not _inside_pair_sphere(curve):
            continue
        return curve
    raise InfeasibleSpec(f"could not place an embedded {kind}")


def _embed_on_rect(kind, rng, rect: _Rect) -> Curve:
    # coordinates in [-1, 1] map to the face; keep a 25% margin to its border
    origin = rect.origin + 0.5 * (rect.e1 + rect.e2)
    return _embedded_curve(kind, rng, origin, 0.5 * rect.e1, 0.5 * rect.e2,
                           lambda x, y: abs(x) <= 0.75 and abs(y) <= 0.75)


def _embed_on_disk(kind, rng, disk: _Disk) -> Curve:
    return _embedded_curve(kind, rng, disk.center, disk.radius * disk.e1, disk.radius * disk.e2,
                           lambda x, y: x * x + y * y <= 0.7**2)


# --------------------------------------------------------------------------- #
# Scene assembly
# --------------------------------------------------------------------------- #


def _endpoints(curves) -> np.ndarray:
    pts = []
    for c in curves:
        if c.closed:
            continue
        for e in c.endpoints:
            if not any(np.linalg.norm(e - q) <= 1e-9 for q in pts):
                pts.append(np.asarray(e, float))
    return np.array(pts).reshape(-1, 3)


def _sample_surfaces(surfaces, n, rng):
    areas = np.array([s.area for s in surfaces])
    counts = rng.multinomial(n, areas / areas.sum())
    pts, nrm = [], []
    for s, m in zip(surfaces, counts):
        if m:
            p, q = s.sample(rng, int(m))
            pts.append(p)
            nrm.append(q)
    return np.vstack(pts), np.vstack(nrm)


def _arclength_table(curve: Curve, m: int = 2049):
    samp = curve.sample(m)
    cum = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(samp, axis=0), axis=1))])
    return np.linspace(0.0, 1.0, m), cum


def _point_at_fraction(curve: Curve, frac: np.ndarray) -> np.ndarray:
    """Points at arc-length fractions ``frac`` (exactly on the curve)."""
    if isinstance(curve, LineSegment):
        return curve.a + np.outer(frac, curve.b - curve.a)
    if isinstance(curve, CircleCanonical):
        lo, hi = curve.arc_range
        return curve.point_at(lo + frac * (hi - lo))
    t, cum = _arclength_table(curve)
    return curve.evaluate(np.interp(frac * cum[-1], cum, t))


def _sample_wire(curves, n, rng):
    lengths = np.array([c.length() for c in curves])
    counts = np.floor(n * lengths / lengths.sum()).astype(int)
    counts[: n - counts.sum()] += 1
    pts, nrm = [], []
    for c, m in zip(curves, counts):
        frac = (np.arange(m) + rng.random(m)) / m  # stratified along arc length
        p = _point_at_fraction(c, frac)
        dp = _point_at_fraction(c, np.clip(frac + 1e-4, 0, 1)) - _point_at_fraction(c, np.clip(frac - 1e-4, 0, 1))
        tang = dp / np.linalg.norm(dp, axis=1, keepdims=True)
        ref = np.zeros_like(tang)
        ref[np.arange(m), np.argmin(np.abs(tang), axis=1)] = 1.0
        side = np.cross(tang, ref)
        side /= np.linalg.norm(side, axis=1, keepdims=True)
        pts.append(p)
        nrm.append(side)
    return np.vstack(pts), np.vstack(nrm)


def median_spacing(points: np.ndarray) -> float:
    d, _ = cKDTree(points).query(points, k=2)
    return float(np.median(d[:, 1]))


def label_points(points: np.ndarray, curves, corners: np.ndarray, band: float,
                 corner_band: float | None = None) -> GroundTruthLabels:
    """Nearest-curve label transfer inside ``band``; offsets project exactly onto curve / corner.

    Every corner keeps at least its nearest point, however sparse the sampling.
    """
    corner_band = band if corner_band is None else corner_band
    n = len(points)
    dist = np.stack([distance_to_curve(points, c) for c in curves], axis=1)
    nearest = np.argmin(dist, axis=1)
    dmin = dist[np.arange(n), nearest]
    edge = dmin <= band
    d_edge = np.zeros((n, 3))
    curve_id = np.full(n, -1, dtype=np.int64)
    for k, c in enumerate(curves):
        sel = np.flatnonzero(edge & (nearest == k))
        if len(sel):
            d_edge[sel] = project_points_to_curve(points[sel], c) - points[sel]
            curve_id[sel] = k
    corner = np.zeros(n, dtype=bool)
    d_corner = np.zeros((n, 3))
    if len(corners):
        cd, ci = cKDTree(corners).query(points)
        corner = cd <= corner_band
        corner[cKDTree(points).query(corners)[1]] = True
        ci = cKDTree(corners).query(points)[1]
        d_corner[corner] = corners[ci[corner]] - points[corner]
    return GroundTruthLabels(edge, corner, d_edge, d_corner, curve_id)


def assemble(spec: SceneSpec, surfaces, curves, rng, wire: bool = False) -> SyntheticScene:
    if wire:
        pts, nrm = _sample_wire(curves, spec.n_points, rng)
    else:
        pts, nrm = _sample_surfaces(surfaces, spec.n_points, rng)
    corners = _endpoints(curves)
    spacing = median_spacing(pts)
    gt = label_points(pts, curves, corners, spec.band_factor * spacing, spec.corner_band_factor * spacing)
    scene = SyntheticScene(spec, PointCloud(pts), nrm, gt, tuple(curves), corners)
    if spec.noise_X > 0:
        scene = add_noise(scene, spec.noise_X, seed=spec.seed)
    return scene


def _check_budget(spec: SceneSpec):
    b = spec.curve_budget
    if spec.solid_kind == "wireframe_only":
        return 0, 0
    if b.lines % 12 or b.circles % 2:
        raise InfeasibleSpec("solids provide lines in twelves and circles in pairs")
    boxes, cyls = b.lines // 12, b.circles // 2
    if spec.solid_kind == "box_union" and boxes == 0:
        raise InfeasibleSpec("box_union needs at least one box (12 lines)")
    if spec.solid_kind == "cylinder_union" and cyls == 0:
        raise InfeasibleSpec("cylinder_union needs at least one cylinder (2 circles)")
    if b.arcs + b.bsplines > 6 * boxes + 2 * cyls:
        raise InfeasibleSpec("not enough faces to embed the requested arcs and B-splines")
    return boxes, cyls


def _solid_scene(spec: SceneSpec, rng) -> SyntheticScene:
    boxes, cyls = _check_budget(spec)
    b = spec.curve_budget
    surfaces, curves, hosts = [], [], []
    x = 0.0
    for _ in range(boxes):
        half = rng.uniform(0.3, 0.7, 3)
        reach = float(np.linalg.norm(half))
        lay = box_layout([x + reach, 0.0, 0.0], _frame(rng), half)
        x += 2 * reach + 0.4
        surfaces += lay.surfaces
        curves += lay.curves
        hosts += lay.surfaces
    for _ in range(cyls):
        r, h = rng.uniform(0.3, 0.6), rng.uniform(0.5, 1.2)
        reach = math.hypot(r, 0.5 * h)
        axis = _frame(rng)[:, 2]
        lay = cylinder_layout(np.array([x + reach, 0.0, 0.0]) - 0.5 * h * axis, axis, r, h)
        x += 2 * reach + 0.4
        surfaces += lay.surfaces
        curves += lay.curves
        hosts += [s for s in lay.surfaces if isinstance(s, _Disk)]
    kinds = ["arc"] * b.arcs + ["bspline"] * b.bsplines
    order = rng.permutation(len(hosts))
    for kind, h in zip(kinds, order):
        host = hosts[h]
        embed = _embed_on_rect if isinstance(host, _Rect) else _embed_on_disk
        curves.append(embed(kind, rng, host))
    return assemble(spec, surfaces, curves, rng)


def _wire_segment(kind, rng, a, b) -> Curve:
    if kind == "line":
        return LineSegment(a, b)
    d = b - a
    chord = np.linalg.norm(d)
    e1, e2 = _perp_frame(d / chord)
    th = rng.uniform(0, 2 * math.pi)
    perp = math.cos(th) * e1 + math.sin(th) * e2
    if kind == "arc":
        return circle_arc_through(a, 0.5 * (a + b) + rng.uniform(0.2, 0.4) * chord * perp, b)
    side = np.cross(d / chord, perp)
    s = rng.uniform(0.25, 0.4, 2) * chord
    return CubicBSpline(np.stack([a, a + d / 3 + s[0] * perp + 0.1 * chord * side,
                                  a + 2 * d / 3 - s[1] * perp, b]))


def _curves_clear(curves, adjacency, min_gap) -> bool:
    samples = [c.sample(96) for c in curves]
    trees = [cKDTree(s) for s in samples]
    for i in range(len(curves)):
        for j in range(i + 1, len(curves)):
            shared = adjacency.get((i, j))
            si, sj = samples[i], samples[j]
            if shared is not None:
                # ignore the neighbourhood of the shared corner
                si = si[np.linalg.norm(si - shared, axis=1) > 2 * min_gap]
                sj = sj[np.linalg.norm(sj - shared, axis=1) > 2 * min_gap]
                if len(si) == 0 or len(sj) == 0:
                    return False
                d, _ = cKDTree(sj).query(si)
            else:
                d, _ = trees[j].query(si)
            if d.min() < min_gap:
                return False
    return True


def _inside_pair_sphere(curve) -> bool:
    """Whether an open curve stays strictly inside the sphere spanned by its endpoints."""
    if curve.closed:
        return True
    a, b = curve.endpoints
    samp = curve.sample(97)[1:-1]
    return bool(np.max(np.linalg.norm(samp - 0.5 * (a + b), axis=1)) < (1 - 1e-6) * 0.5 * np.linalg.norm(b - a))


def _wire_scene(spec: SceneSpec, rng) -> SyntheticScene:
    b = spec.curve_budget
    kinds = ["line"] * b.lines + ["arc"] * b.arcs + ["bspline"] * b.bsplines
    for _ in range(400):
        order = [kinds[i] for i in rng.permutation(len(kinds))]
        chains = [order[i:i + 3] for i in range(0, len(order), 3)]
        curves, adjacency, corners = [], {}, []
        ok = True
        for chain in chains:
            prev_dir = None
            p = rng.uniform(0, 2.0, 3)
            corners.append(p)
            for k, kind in enumerate(chain):
                for _ in range(50):
                    step = rng.uniform(0.7, 1.1)
                    d = rng.normal(size=3)
                    d /= np.linalg.norm(d)
                    if prev_dir is not None:
                        # interior angle at the shared corner between 40 and 80 degrees
                        ang = math.degrees(math.acos(np.clip(-prev_dir @ d, -1, 1)))
                        if not 40 <= ang <= 80:
                            continue
                    q = p + step * d
                    if np.all((q > -0.2) & (q < 2.2)):
                        break
                else:
                    ok = False
                    break
                seg = _wire_segment(kind, rng, p, q)
                if not _inside_pair_sphere(seg):
                    ok = False
                    break
                if k > 0:
                    adjacency[(len(curves) - 1, len(curves))] = p.copy()
                curves.append(seg)
                corners.append(q)
                prev_dir, p = d, q
            if not ok:
                break
        if not ok:
            continue
        for _ in range(b.circles):
            n = rng.normal(size=3)
            n /= np.linalg.norm(n)
            e1, e2 = _perp_frame(n)
            curves.append(CircleCanonical(n, rng.uniform(0.3, 1.7, 3), rng.uniform(0.3, 0.5), e1, np.cross(e1, n)))
        c = np.array(corners).reshape(-1, 3)
        if len(c) > 1 and np.min(np.linalg.norm(c[:, None] - c[None], axis=2)[np.triu_indices(len(c), 1)]) < 0.35:
            continue
        if not _curves_clear(curves, adjacency, 0.15):
            continue
        return assemble(spec, [], curves, rng, wire=True)
    raise InfeasibleSpec("could not place a non-intersecting wireframe")


def generate(spec: SceneSpec) -> SyntheticScene:
    """Deterministic scene for ``spec``."""
    rng = np.random.default_rng(spec.seed)
    if spec.solid_kind == "wireframe_only":
        return _wire_scene(spec, rng)
    return _solid_scene(spec, rng)


# --------------------------------------------------------------------------- #
# Perturbations
# --------------------------------------------------------------------------- #


def local_feature_size(points: np.ndarray, k: int = 8) -> np.ndarray:
    """Per-point median distance to the ``k`` nearest neighbours."""
    d, _ = cKDTree(points).query(points, k=k + 1)
    return np.median(d[:, 1:], axis=1)


def add_noise(scene: SyntheticScene, X: float, seed: Optional[int] = None) -> SyntheticScene:
    """Move each point along its normal by ``s * h``, ``s ~ U[-X, X]``, ``h`` the local feature size.

    Labels and offsets are left as generated, so offsets no longer land exactly
    on the curves once X > 0.
    """
    if X < 0:
        raise ValueError("X must be non-negative")
    if X == 0:
        return scene
    rng = np.random.default_rng([scene.spec.seed if seed is None else seed, 7919])
    pts = scene.points
    h = local_feature_size(pts)
    s = rng.uniform(-X, X, len(pts))
    moved = pts + (s * h)[:, None] * scene.normals
    return replace(scene, cloud=PointCloud(moved), spec=replace(scene.spec, noise_X=X))


def subsample(scene: SyntheticScene, P: int, method: str = "random", seed: int = 0) -> SyntheticScene:
    """Keep ``P`` points (sorted original order) with their labels."""
    n = len(scene.cloud)
    if P > n:
        raise PTooLarge(f"asked for {P} of {n} points")
    if P < 1:
        raise ValueError("P must be positive")
    if P == n:
        idx = np.arange(n)
    elif method == "random":
        idx = np.sort(np.random.default_rng(seed).choice(n, P, replace=False))
    elif method == "fps":
        idx = np.sort(farthest_point_sampling(scene.points, P, 0))
    else:
        raise ValueError(f"unknown subsampling method {method!r}")
    return replace(scene, cloud=PointCloud(scene.points[idx]), normals=scene.normals[idx],
                   gt=scene.gt.subset(idx), spec=replace(scene.spec, n_points=P))


# --------------------------------------------------------------------------- #
# Fixtures
# --------------------------------------------------------------------------- #


def unit_box_scene(n_points: int = 8096, seed: int = 0) -> SyntheticScene:
    spec = SceneSpec(seed=seed, n_points=n_points)
    lay = box_layout(np.zeros(3), np.eye(3), np.full(3, 0.5))
    return assemble(spec, lay.surfaces, lay.curves, np.random.default_rng(seed))


def cylinder_scene(n_points: int = 8096, seed: int = 0, radius: float = 0.5, height: float = 1.0) -> SyntheticScene:
    spec = SceneSpec(seed=seed, n_points=n_points, curve_budget=CurveBudget(lines=0, circles=2),
                     solid_kind="cylinder_union")
    lay = cylinder_layout(np.zeros(3), np.array([0.0, 0.0, 1.0]), radius, height)
    return assemble(spec, lay.surfaces, lay.curves, np.random.default_rng(seed))


def plane_points(n: int = 2048, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    uv = rng.random((n, 2))
    return np.column_stack([uv, np.zeros(n)])


def dihedral_scene(n_points: int = 8096, seed: int = 0, angle_deg: float = 90.0) -> SyntheticScene:
    """Two unit squares meeting along the x-axis crease at ``angle_deg``."""
    th = math.radians(angle_deg)
    spec = SceneSpec(seed=seed, n_points=n_points, curve_budget=CurveBudget(lines=1),
                     solid_kind="wireframe_only")
    x = np.array([1.0, 0.0, 0.0])
    a = np.array([0.0, 1.0, 0.0])
    b = np.array([0.0, math.cos(th), math.sin(th)])
    surfaces = [_Rect(np.zeros(3), x, a, np.array([0.0, 0.0, 1.0])),
                _Rect(np.zeros(3), x, b, np.cross(b, x))]
    crease = [LineSegment(np.zeros(3), x)]
    rng = np.random.default_rng(seed)
    pts, nrm = _sample_surfaces(surfaces, n_points, rng)
    band = spec.band_factor * median_spacing(pts)
    # the crease ends at the patch border, so no corner labels
    gt = label_points(pts, crease, np.zeros((0, 3)), band)
    return SyntheticScene(spec, PointCloud(pts), nrm, gt, tuple(crease), np.zeros((0, 3)))


FIXTURE_SPECS = (
    # boxes
    SceneSpec(seed=101, curve_budget=CurveBudget(lines=12), solid_kind="box_union"),
    SceneSpec(seed=102, curve_budget=CurveBudget(lines=12, arcs=1), solid_kind="box_union"),
    SceneSpec(seed=103, curve_budget=CurveBudget(lines=12, bsplines=1), solid_kind="box_union"),
    SceneSpec(seed=104, curve_budget=CurveBudget(lines=12, arcs=1, bsplines=1), solid_kind="box_union"),
    SceneSpec(seed=105, curve_budget=CurveBudget(lines=24), solid_kind="box_union"),
    # cylinders
    SceneSpec(seed=201, curve_budget=CurveBudget(lines=0, circles=2), solid_kind="cylinder_union"),
    SceneSpec(seed=202, curve_budget=CurveBudget(lines=0, circles=2, arcs=1), solid_kind="cylinder_union"),
    SceneSpec(seed=203, curve_budget=CurveBudget(lines=0, circles=2, bsplines=1), solid_kind="cylinder_union"),
    SceneSpec(seed=204, curve_budget=CurveBudget(lines=0, circles=4), solid_kind="cylinder_union"),
    SceneSpec(seed=205, curve_budget=CurveBudget(lines=12, circles=2), solid_kind="cylinder_union"),
    # wireframes
    SceneSpec(seed=301, curve_budget=CurveBudget(lines=2, arcs=1, circles=1, bsplines=1), solid_kind="wireframe_only"),
    SceneSpec(seed=302, curve_budget=CurveBudget(lines=3, arcs=1, circles=1, bsplines=1), solid_kind="wireframe_only"),
    SceneSpec(seed=303, curve_budget=CurveBudget(lines=1, arcs=2, circles=1, bsplines=1), solid_kind="wireframe_only"),
    SceneSpec(seed=304, curve_budget=CurveBudget(lines=2, arcs=1, circles=1, bsplines=2), solid_kind="wireframe_only"),
    SceneSpec(seed=305, curve_budget=CurveBudget(lines=3, arcs=2, circles=1, bsplines=1), solid_kind="wireframe_only"),
    SceneSpec(seed=306, curve_budget=CurveBudget(lines=1, arcs=1, circles=1, bsplines=1), solid_kind="wireframe_only"),
    SceneSpec(seed=307, curve_budget=CurveBudget(lines=2, arcs=2, circles=2, bsplines=1), solid_kind="wireframe_only"),
    SceneSpec(seed=308, curve_budget=CurveBudget(lines=4, arcs=1, circles=1, bsplines=1), solid_kind="wireframe_only"),
    SceneSpec(seed=309, curve_budget=CurveBudget(lines=2, arcs=1, circles=2, bsplines=2), solid_kind="wireframe_only"),
    SceneSpec(seed=310, curve_budget=CurveBudget(lines=3, arcs=1, circles=1, bsplines=1), solid_kind="wireframe_only"),
)


def scene_name(spec: SceneSpec) -> str:
    return f"{spec.solid_kind.split('_')[0]}_{spec.seed:03d}"


def fixture_suite(n_points: Optional[int] = None) -> list[SyntheticScene]:
    specs = FIXTURE_SPECS if n_points is None else [replace(s, n_points=n_points) for s in FIXTURE_SPECS]
    return [generate(s) for s in specs]
