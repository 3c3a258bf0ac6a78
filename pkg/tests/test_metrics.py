import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from edgecurves.geometry import CubicBSpline, LineSegment, circle_from_three_points
from edgecurves.metrics import (
    EmptyCurveSet,
    EvalReport,
    curve_recovery,
    edge_chamfer_distance,
    edge_classification_metrics,
    evaluate,
    reports_to_csv,
    segmentation_precision,
    summary_json,
)

index_sets = st.sets(st.integers(0, 60), max_size=40)


def test_classification_examples():
    assert edge_classification_metrics([1, 2, 3], [1, 2, 3]) == (1, 1, 1)
    iou, p, r = edge_classification_metrics([1, 2], [2, 3])
    assert (iou, p, r) == (pytest.approx(1 / 3), 0.5, 0.5)
    assert edge_classification_metrics([], [1, 2]) == (0, 0, 0)
    assert edge_classification_metrics([], []) == (1, 1, 1)


@given(pred=index_sets, truth=index_sets)
def test_iou_bounded_by_precision_and_recall(pred, truth):
    iou, p, r = edge_classification_metrics(sorted(pred), sorted(truth))
    assert 0 <= iou <= min(p, r) <= 1


def test_ecd_identity_floor():
    curves = [LineSegment(np.zeros(3), np.array([1.0, 0, 0])),
              circle_from_three_points([1, 0, 0], [0, 1, 0], [-1, 0, 0])]
    assert edge_chamfer_distance(curves, curves) < 1e-3
    with pytest.raises(EmptyCurveSet):
        edge_chamfer_distance([], curves)


def test_ecd_parallel_shift_approaches_two_t():
    t = 0.01
    a = LineSegment(np.zeros(3), np.array([1.0, 0, 0]))
    b = LineSegment(np.array([0, t, 0]), np.array([1.0, t, 0]))
    for density in (16, 256, 4096):
        assert edge_chamfer_distance([b], [a], density, scale=1.0) == pytest.approx(2 * t, abs=1e-12)


def test_ecd_missing_curve_dominated_by_truth_term():
    a = LineSegment(np.zeros(3), np.array([1.0, 0, 0]))
    b = LineSegment(np.array([0, 1.0, 0]), np.array([1.0, 1.0, 0]))
    ecd = edge_chamfer_distance([a], [a, b], scale=1.0)
    # half the truth samples sit a unit away; the predicted-to-truth term is zero
    assert ecd == pytest.approx(0.5, abs=1e-2)


def test_ecd_rigid_invariance(rng):
    curves = [LineSegment(np.zeros(3), np.array([1.0, 0.2, 0])), CubicBSpline(rng.normal(size=(4, 3))),
              circle_from_three_points(*rng.normal(size=(3, 3)))]
    truth = [LineSegment(np.zeros(3), np.array([1.0, 0, 0])), CubicBSpline(rng.normal(size=(4, 3)))]
    R = Rotation.from_rotvec(rng.normal(size=3)).as_matrix()
    t = rng.normal(size=3)

    def move(c):
        if c.kind == "line":
            return LineSegment(R @ c.a + t, R @ c.b + t)
        if c.kind == "bspline":
            return CubicBSpline(c.control @ R.T + t)
        p = c.three_points
        return circle_from_three_points(*(p @ R.T + t))

    base = edge_chamfer_distance(curves, truth, scale=2.0)
    moved = edge_chamfer_distance([move(c) for c in curves], [move(c) for c in truth], scale=2.0)
    assert abs(base - moved) < 1e-9


def test_ecd_decreases_toward_truth():
    truth = [CubicBSpline(np.array([[0, 0, 0], [0.3, 0.4, 0], [0.7, -0.4, 0], [1, 0, 0.0]]))]
    start = np.array([[0, 0, 0], [0.3, 1.0, 0.3], [0.7, 0.5, 0.2], [1, 0, 0.0]])
    vals = []
    for w in np.linspace(0, 1, 11):
        ctrl = (1 - w) * start + w * truth[0].control
        vals.append(edge_chamfer_distance([CubicBSpline(ctrl)], truth, scale=1.0))
    assert all(b <= a + 1e-3 for a, b in zip(vals, vals[1:]))


def test_segmentation_precision():
    ids = np.array([0, 0, 0, 1, 1, -1])
    assert segmentation_precision([np.array([0, 1, 2])], ids) == 1.0
    assert segmentation_precision([np.array([0, 1, 3, 5])], ids) == 0.5
    assert segmentation_precision([], ids) == 1.0


def test_curve_recovery():
    a = LineSegment(np.zeros(3), np.array([1.0, 0, 0]))
    b = LineSegment(np.array([0, 1.0, 0]), np.array([1.0, 1.0, 0]))
    assert curve_recovery([a, b], [a, b], 1.0) == 1.0
    assert curve_recovery([a], [a, b], 1.0) == 0.5


def test_reports():
    r = evaluate([LineSegment(np.zeros(3), np.ones(3))], [LineSegment(np.zeros(3), np.ones(3))],
                 [1, 2], [2, 3], scale=math.sqrt(3), scene="s1")
    assert isinstance(r, EvalReport) and (r.tp, r.fp, r.fn) == (1, 1, 1)
    lines = reports_to_csv([r]).splitlines()
    assert lines[0] == "scene,ecd,iou,precision,recall" and lines[1].startswith("s1,")
    summary = json.loads(summary_json([r]))
    assert summary["summary"]["mean_iou"] == pytest.approx(1 / 3)
    assert evaluate([], [], [], []).ecd == 0.0
