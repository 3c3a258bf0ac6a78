import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.interpolate import BSpline

from edgecurves.geometry import (
    CircleCanonical,
    CollinearPoints,
    CubicBSpline,
    DuplicatePoints,
    EmptySet,
    LineSegment,
    PointCloud,
    bspline_basis,
    chamfer_distance,
    chamfer_distance_bruteforce,
    circle_arc_through,
    circle_from_three_points,
    curve_from_dict,
    curve_to_dict,
    distance_to_curve,
    point_segment_distance,
    sample_bspline,
    sample_circle,
    sample_line,
)

coord = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
point = st.tuples(coord, coord, coord).map(np.array)


def random_circle(rng):
    n = rng.normal(size=3)
    n /= np.linalg.norm(n)
    u = np.cross(n, rng.normal(size=3))
    u /= np.linalg.norm(u)
    v = np.cross(u, n)
    c = rng.uniform(-5, 5, 3)
    r = rng.uniform(0.1, 5)
    ang = np.sort(rng.uniform(0, 2 * math.pi, 3))
    while np.min(np.diff(np.r_[ang, ang[0] + 2 * math.pi])) < 0.2:
        ang = np.sort(rng.uniform(0, 2 * math.pi, 3))
    pts = c + r * (np.outer(np.cos(ang), u) + np.outer(np.sin(ang), v))
    return c, r, n, pts


# ---------------------------------------------------------------- circles


def test_unit_circle_from_three_points():
    c = circle_from_three_points([1, 0, 0], [0, 1, 0], [-1, 0, 0])
    assert np.allclose(c.center, 0, atol=1e-12)
    assert c.radius == pytest.approx(1.0, abs=1e-12)
    assert abs(abs(c.normal[2]) - 1) < 1e-12


def test_scaled_circle():
    c = circle_from_three_points([2, 0, 0], [0, 2, 0], [-2, 0, 0])
    assert np.allclose(c.center, 0, atol=1e-12)
    assert c.radius == pytest.approx(2.0, abs=1e-12)


def test_collinear_and_duplicate_points():
    with pytest.raises(CollinearPoints):
        circle_from_three_points([0, 0, 0], [1, 0, 0], [2, 0, 0])
    with pytest.raises(DuplicatePoints):
        circle_from_three_points([0, 0, 0], [0, 0, 0], [2, 1, 0])


def test_u_points_at_first_point():
    c = circle_from_three_points([3, 1, 0], [1, 3, 0], [-1, 1, 0])
    assert np.allclose(sample_circle(c, 1)[0], [3, 1, 0], atol=1e-12)
    assert np.allclose(c.u, (np.array([3, 1, 0]) - c.center) / c.radius)


def test_full_circle_quarter_samples():
    c = CircleCanonical(np.array([0, 0, 1.0]), np.zeros(3), 1.0, np.array([1.0, 0, 0]), np.array([0, 1.0, 0]))
    s = sample_circle(c, 4)
    assert np.allclose(s, [[1, 0, 0], [0, 1, 0], [-1, 0, 0], [0, -1, 0]], atol=1e-15)


def test_arc_samples_include_both_endpoints():
    arc = circle_arc_through(np.array([1.0, 0, 0]), np.array([0.5**0.5, 0.5**0.5, 0]), np.array([0, 1.0, 0]))
    s = sample_circle(arc, 5)
    ends = sorted([tuple(np.round(s[0], 9)), tuple(np.round(s[-1], 9))])
    assert np.allclose(ends, [[0, 1, 0], [1, 0, 0]], atol=1e-9)
    # the arc is the short one through the middle point
    assert arc.length() == pytest.approx(math.pi / 2)
    assert not arc.closed


def test_frame_is_orthonormal(rng):
    for _ in range(50):
        _, _, _, pts = random_circle(rng)
        c = circle_from_three_points(*pts)
        for a in (c.normal, c.u, c.v):
            assert abs(np.linalg.norm(a) - 1) < 1e-9
        assert abs(c.u @ c.normal) < 1e-9 and abs(c.v @ c.normal) < 1e-9 and abs(c.u @ c.v) < 1e-9


@given(p1=point, p2=point, p3=point, m=st.integers(1, 200))
def test_samples_on_circle_and_in_plane(p1, p2, p3, m):
    try:
        c = circle_from_three_points(p1, p2, p3)
    except (CollinearPoints, DuplicatePoints):
        return
    s = sample_circle(c, m)
    scale = max(1.0, c.radius)
    assert np.max(np.abs(np.linalg.norm(s - c.center, axis=1) - c.radius)) < 1e-9 * scale
    assert np.max(np.abs((s - c.center) @ c.normal)) < 1e-9 * scale


@given(p1=point, p2=point, p3=point)
def test_input_points_lie_on_circle(p1, p2, p3):
    try:
        c = circle_from_three_points(p1, p2, p3)
    except (CollinearPoints, DuplicatePoints):
        return
    if c.radius > 1e6:
        return  # nearly collinear: the 1e-9 r bound is still what we check, relative
    for p in (p1, p2, p3):
        assert abs(np.linalg.norm(p - c.center) - c.radius) < 1e-9 * c.radius
        assert abs((p - c.center) @ c.normal) < 1e-9 * c.radius


def test_three_point_round_trip(rng):
    for _ in range(1000):
        c, r, n, pts = random_circle(rng)
        fit = circle_from_three_points(*pts)
        assert abs(fit.radius - r) / r < 1e-6
        assert np.linalg.norm(fit.center - c) / r < 1e-6
        assert abs(abs(fit.normal @ n) - 1) < 1e-9


# ---------------------------------------------------------------- B-splines


def test_constant_control_points():
    q = np.array([0.3, -1.0, 2.0])
    s = sample_bspline(CubicBSpline(np.tile(q, (4, 1))), 17)
    assert np.allclose(s, q, atol=1e-15)


def test_collinear_control_endpoints():
    a, b = np.zeros(3), np.array([3.0, 0, 0])
    ctrl = np.linspace(a, b, 4)
    assert np.array_equal(sample_bspline(CubicBSpline(ctrl), 2), np.vstack([a, b]))


def test_midpoint_value_and_basis():
    P = np.array([[0, 0, 0], [1, 1, 0], [2, -1, 0], [3, 0, 0]], dtype=float)
    assert np.allclose(bspline_basis(0.5), [1 / 8, 3 / 8, 3 / 8, 1 / 8], atol=1e-15)
    assert np.allclose(CubicBSpline(P).evaluate(0.5), [1.5, 0, 0], atol=1e-15)
    assert np.allclose(sample_bspline(CubicBSpline(P), 3)[1], [1.5, 0, 0], atol=1e-15)


def test_basis_matches_scipy_de_boor(rng):
    knots = np.array([0, 0, 0, 0, 1, 1, 1, 1.0])
    P = rng.normal(size=(4, 3))
    ref = BSpline(knots, P, 3)
    alpha = np.linspace(0, 1, 101)
    assert np.allclose(CubicBSpline(P).evaluate(alpha), ref(alpha), atol=1e-13)


def test_partition_of_unity(rng):
    alpha = rng.random(1000)
    B = bspline_basis(alpha)
    assert np.max(np.abs(B.sum(axis=-1) - 1)) < 1e-12
    assert np.all(B >= -1e-15)


@given(ctrl=arrays(float, (4, 3), elements=coord), m=st.integers(2, 64))
def test_exact_endpoints_and_convex_hull(ctrl, m):
    s = sample_bspline(CubicBSpline(ctrl), m)
    assert np.array_equal(s[0], ctrl[0]) and np.array_equal(s[-1], ctrl[3])
    # convex hull test via the basis weights being a convex combination
    w = bspline_basis(np.linspace(0, 1, m))
    assert np.all(w >= -1e-12) and np.allclose(w.sum(axis=1), 1, atol=1e-12)
    assert np.allclose(w @ ctrl, s, atol=1e-9 * max(1.0, np.abs(ctrl).max()))


# ---------------------------------------------------------------- lines


def test_line_samples():
    line = LineSegment(np.zeros(3), np.array([1.0, 0, 0]))
    assert np.allclose(sample_line(line, 3), [[0, 0, 0], [0.5, 0, 0], [1, 0, 0]])
    assert np.array_equal(sample_line(line, 2), np.vstack([line.a, line.b]))
    with pytest.raises(ValueError):
        LineSegment(np.zeros(3), np.zeros(3))


@given(a=point, b=point, m=st.integers(2, 100))
def test_line_samples_on_segment(a, b, m):
    if np.allclose(a, b):
        return
    s = sample_line(LineSegment(a, b), m)
    assert np.max(point_segment_distance(s, a, b)) < 1e-12 * max(1.0, np.abs(np.r_[a, b]).max())


# ---------------------------------------------------------------- Chamfer


def test_chamfer_examples():
    A = np.random.default_rng(0).random((30, 3))
    assert chamfer_distance(A, A) == 0.0
    assert chamfer_distance([[0, 0, 0]], [[1, 0, 0]]) == 2.0
    with pytest.raises(EmptySet):
        chamfer_distance(np.zeros((0, 3)), A)


def test_chamfer_matches_bruteforce_exactly(rng):
    for _ in range(100):
        A = rng.normal(size=(int(rng.integers(1, 200)), 3))
        B = rng.normal(size=(int(rng.integers(1, 200)), 3))
        assert chamfer_distance(A, B) == chamfer_distance_bruteforce(A, B)


@given(A=arrays(float, st.tuples(st.integers(1, 40), st.just(3)), elements=coord),
       B=arrays(float, st.tuples(st.integers(1, 40), st.just(3)), elements=coord))
def test_chamfer_symmetric(A, B):
    assert chamfer_distance(A, B) == chamfer_distance(B, A)
    assert chamfer_distance(A, A) == 0.0
    assert chamfer_distance(A, B) >= 0.0


# ---------------------------------------------------------------- misc


def test_point_cloud_diagonal():
    cloud = PointCloud(np.array([[0, 0, 0], [1, 2, 2.0]]))
    assert cloud.bbox_diagonal == pytest.approx(3.0)
    with pytest.raises(ValueError):
        PointCloud(np.zeros((0, 3)))


def test_serialisation_round_trip(rng):
    _, _, _, pts = random_circle(rng)
    curves = [LineSegment(np.zeros(3), np.ones(3)), CubicBSpline(rng.normal(size=(4, 3))),
              circle_from_three_points(*pts), circle_arc_through(*pts)]
    for c in curves:
        back = curve_from_dict(curve_to_dict(c))
        assert back.kind == c.kind and back.closed == c.closed
        assert np.allclose(back.sample(16), c.sample(16), atol=1e-12)


def test_distance_to_curve_zero_on_samples(rng):
    _, _, _, pts = random_circle(rng)
    for c in (LineSegment(np.zeros(3), np.ones(3)), CubicBSpline(rng.normal(size=(4, 3))),
              circle_from_three_points(*pts)):
        assert np.max(distance_to_curve(c.sample(20), c)) < 1e-9
