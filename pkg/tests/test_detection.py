import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.cluster.hierarchy import fcluster, linkage

from edgecurves.detection import (
    CloudTooSmall,
    DetectionConfig,
    GroundTruthLabels,
    LengthMismatch,
    PointScores,
    binary_cross_entropy,
    corner_nms,
    covariance_scorer,
    detection_loss,
    focal_loss,
    oracle_scorer,
    smooth_l1,
    threshold_points,
)
from edgecurves.geometry import PointCloud
from edgecurves.synthdata import dihedral_scene, median_spacing, plane_points

probs = arrays(float, st.integers(1, 50), elements=st.floats(0, 1))


def test_defaults_follow_published_values():
    cfg = DetectionConfig()
    assert (cfg.tau_e, cfg.tau_c, cfg.delta_factor) == (0.7, 0.9, 0.05)
    assert (cfg.lambda_e, cfg.lambda_c, cfg.focal_gamma, cfg.focal_alpha) == (100, 100, 2.0, 0.25)


# ---------------------------------------------------------------- losses


def test_focal_single_positive():
    assert focal_loss([0.5], [1], gamma=2, alpha=0.25) == pytest.approx(0.25 * 0.25 * math.log(2), abs=1e-15)
    assert focal_loss([0.5], [1], gamma=2, alpha=0.25) == pytest.approx(0.04332, abs=1e-5)


def test_focal_perfect_predictions():
    assert focal_loss([1, 0, 1, 0], [1, 0, 1, 0]) <= 1e-5


def test_focal_length_mismatch():
    with pytest.raises(LengthMismatch):
        focal_loss([0.1, 0.2], [1])


@given(p=probs, data=st.data())
def test_focal_reduces_to_cross_entropy(p, data):
    y = data.draw(arrays(bool, len(p)))
    assert abs(focal_loss(p, y, gamma=0, alpha=1) - binary_cross_entropy(p, y)) <= 1e-12


def test_focal_reduces_to_cross_entropy_random(rng):
    for _ in range(200):
        n = int(rng.integers(1, 500))
        p, y = rng.random(n), rng.random(n) < 0.3
        assert abs(focal_loss(p, y, 0, 1) - binary_cross_entropy(p, y)) <= 1e-12


@given(a=st.floats(0, 1), b=st.floats(0, 1), gamma=st.floats(0, 5), alpha=st.floats(0.01, 0.99),
       positive=st.booleans())
def test_focal_non_increasing_in_pt(a, b, gamma, alpha, positive):
    lo, hi = sorted((a, b))
    # p_t = p for positives and 1 - p for negatives
    p_lo, p_hi = (lo, hi) if positive else (1 - lo, 1 - hi)
    y = [int(positive)]
    assert focal_loss([p_hi], y, gamma, alpha) <= focal_loss([p_lo], y, gamma, alpha) + 1e-15


def test_smooth_l1_branches():
    assert smooth_l1([[0.5, 0, 0]], [[0, 0, 0]]) == 0.125
    assert smooth_l1([[2, 0, 0]], [[0, 0, 0]]) == 1.5
    d = np.random.default_rng(0).normal(size=(10, 3))
    assert smooth_l1(d, d) == 0.0
    assert smooth_l1(d, d + 5, np.zeros(10, bool)) == 0.0
    with pytest.raises(LengthMismatch):
        smooth_l1(d, d[:5])


def _random_gt(rng, n=200):
    edge = rng.random(n) < 0.3
    corner = edge & (rng.random(n) < 0.2)
    return GroundTruthLabels(edge, corner, rng.normal(size=(n, 3)) * 0.01, rng.normal(size=(n, 3)) * 0.01,
                             np.where(edge, rng.integers(0, 5, n), -1))


def test_detection_loss_oracle_and_no_regression(rng):
    gt = _random_gt(rng)
    assert detection_loss(oracle_scorer(gt), gt) <= 1e-5
    n = len(gt)
    scores = PointScores(rng.random(n), rng.random(n), rng.normal(size=(n, 3)), rng.normal(size=(n, 3)))
    cfg = DetectionConfig(lambda_e=0, lambda_c=0)
    expect = focal_loss(scores.t_edge, gt.edge) + focal_loss(scores.t_corner, gt.corner)
    assert detection_loss(scores, gt, cfg) == pytest.approx(expect, abs=1e-15)
    assert detection_loss(scores, gt) >= 0


@given(seed=st.integers(0, 2**31), noise=st.floats(0, 1))
def test_detection_loss_non_negative_and_zero_at_truth(seed, noise):
    rng = np.random.default_rng(seed)
    gt = _random_gt(rng, 60)
    n = len(gt)
    t_e = np.clip(gt.edge + noise * rng.normal(size=n), 0, 1)
    t_c = np.clip(gt.corner + noise * rng.normal(size=n), 0, 1)
    scores = PointScores(t_e, t_c, gt.d_edge + noise * rng.normal(size=(n, 3)), gt.d_corner)
    loss = detection_loss(scores, gt)
    assert loss >= 0
    if noise == 0:
        assert loss <= 1e-5


def test_detection_loss_zero_on_fixtures(suite):
    for name, scene in suite:
        assert detection_loss(oracle_scorer(scene.gt), scene.gt) <= 1e-5, name


# ---------------------------------------------------------------- thresholding


def test_threshold_examples(box_scene):
    cloud, gt = box_scene.cloud, box_scene.gt
    n = len(cloud)
    zero = PointScores(np.zeros(n), np.zeros(n), np.zeros((n, 3)), np.zeros((n, 3)))
    assert len(threshold_points(cloud, zero).edge_idx) == 0
    det = threshold_points(cloud, oracle_scorer(gt))
    assert np.array_equal(det.edge_idx, np.flatnonzero(gt.edge))
    assert np.array_equal(det.corner_idx, np.flatnonzero(gt.corner))
    assert np.allclose(det.edge_pos, cloud.points[gt.edge] + gt.d_edge[gt.edge])


def test_empty_corner_labels_give_no_candidates():
    scene = dihedral_scene(2048)
    det = threshold_points(scene.cloud, oracle_scorer(scene.gt))
    assert len(det.corner_idx) == 0 and len(det.edge_idx) > 0


@given(seed=st.integers(0, 2**31), t1=st.floats(0.01, 0.99), t2=st.floats(0.01, 0.99))
def test_threshold_monotone(seed, t1, t2):
    rng = np.random.default_rng(seed)
    n = 100
    cloud = PointCloud(rng.random((n, 3)))
    scores = PointScores(rng.random(n), rng.random(n), np.zeros((n, 3)), np.zeros((n, 3)))
    lo, hi = sorted((t1, t2))
    a = threshold_points(cloud, scores, DetectionConfig(tau_e=lo, tau_c=lo))
    b = threshold_points(cloud, scores, DetectionConfig(tau_e=hi, tau_c=hi))
    assert set(b.edge_idx) <= set(a.edge_idx)
    assert set(b.corner_idx) <= set(a.corner_idx)


def test_threshold_ablation_values(box_scene):
    cloud = box_scene.cloud
    scores = covariance_scorer(cloud)
    e6 = set(threshold_points(cloud, scores, DetectionConfig(tau_e=0.6)).edge_idx)
    e8 = set(threshold_points(cloud, scores, DetectionConfig(tau_e=0.8)).edge_idx)
    assert e8 <= e6


# ---------------------------------------------------------------- NMS


def test_nms_far_apart_kept():
    out = corner_nms([[0, 0, 0], [0.3, 0, 0]], [0.95, 0.92], delta=0.1)
    assert [c.index for c in out] == [0, 1]


def test_nms_keeps_highest_probability():
    pos = np.array([[0, 0, 0], [0.02, 0, 0], [0, 0.02, 0]])
    out = corner_nms(pos, [0.91, 0.95, 0.93], delta=0.1)
    assert len(out) == 1 and out[0].index == 1 and out[0].prob == 0.95


def test_nms_tie_goes_to_lowest_index():
    out = corner_nms([[0, 0, 0], [0.01, 0, 0]], [0.95, 0.95], delta=0.1, indices=[7, 3])
    assert [c.index for c in out] == [3]


def test_nms_jittered_true_corners(rng):
    delta = 0.05
    centres = np.array([[i, j, k] for i in (0, 1) for j in (0, 1) for k in (0, 1)], float) * 4 * delta
    pos, prob = [], []
    for c in centres:
        for _ in range(5):
            d = rng.normal(size=3)
            pos.append(c + d / np.linalg.norm(d) * rng.uniform(0, delta / 4.01))
            prob.append(rng.uniform(0.9, 1))
    assert len(corner_nms(pos, prob, delta)) == len(centres)


@given(seed=st.integers(0, 2**31), n=st.integers(1, 40), delta=st.floats(0.01, 0.5))
def test_nms_properties(seed, n, delta):
    rng = np.random.default_rng(seed)
    pos = rng.random((n, 3))
    prob = rng.uniform(0.9, 1, n)
    out = corner_nms(pos, prob, delta)
    idx = [c.index for c in out]
    assert len(set(idx)) == len(idx)
    for c in out:
        assert np.array_equal(pos[c.index], c.position)
        assert prob[c.index] == c.prob
    labels = np.ones(n, int) if n == 1 else fcluster(linkage(pos, "complete"), delta, "distance")
    kept_labels = [labels[i] for i in idx]
    assert len(set(kept_labels)) == len(kept_labels) == len(set(labels))
    for lab in set(labels):
        members = np.flatnonzero(labels == lab)
        best = [i for i in idx if labels[i] == lab][0]
        assert prob[best] == prob[members].max()
        assert np.max(np.linalg.norm(pos[members][:, None] - pos[members][None], axis=2)) <= delta + 1e-12


# ---------------------------------------------------------------- scorers


def test_covariance_plane_scores_low():
    scores = covariance_scorer(PointCloud(plane_points(2048)), 16)
    assert scores.t_edge.max() <= 0.1
    assert np.all(scores.d_edge == 0) and np.all(scores.d_corner == 0)


def test_covariance_dihedral_peaks_on_crease():
    scene = dihedral_scene(8096)
    pts = scene.cloud.points
    scores = covariance_scorer(scene.cloud, 16)
    crease_dist = np.hypot(pts[:, 1], pts[:, 2])
    assert crease_dist[np.argmax(scores.t_edge)] <= 2 * median_spacing(pts)


def test_covariance_degenerate_and_small():
    dup = PointCloud(np.tile([[0.2, 0.3, 0.4]], (17, 1)))
    scores = covariance_scorer(dup, 16)
    assert np.all(scores.t_edge == 0) and np.all(scores.t_corner == 0)
    with pytest.raises(CloudTooSmall):
        covariance_scorer(PointCloud(np.random.default_rng(0).random((10, 3))), 16)


def test_scores_validate_lengths():
    with pytest.raises(LengthMismatch):
        PointScores(np.zeros(3), np.zeros(2), np.zeros((3, 3)), np.zeros((3, 3)))
    with pytest.raises(ValueError):
        PointScores(np.full(2, 1.5), np.zeros(2), np.zeros((2, 3)), np.zeros((2, 3)))
