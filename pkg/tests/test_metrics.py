import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from prae.metrics import (
    MetricError,
    evaluate,
    f1_score,
    max_f1,
    mse,
    principal_angles,
    roc_auc,
    roc_curve,
    subspace_angle,
)

from _oracles import brute_force_auc, brute_force_max_f1


def _instance(seed, n=50, ties=False):
    rng = np.random.default_rng(seed)
    labels = rng.random(n) < 0.3
    labels[0], labels[1] = True, False
    scores = rng.integers(0, 5, n).astype(float) if ties else rng.normal(size=n)
    return scores, labels


def test_auc_examples():
    assert roc_auc([0.9, 0.1], [True, False]) == 1.0
    assert roc_auc([1.0, 1.0, 1.0], [True, False, False]) == 0.5
    assert roc_auc([0.3, 0.7, 0.5], [True, False, False]) == 0.0


def test_auc_single_class():
    with pytest.raises(MetricError):
        roc_auc([1, 2], [True, True])


@pytest.mark.parametrize("ties", [False, True])
def test_auc_matches_pairwise_count(ties):
    for seed in range(20):
        s, l = _instance(seed, 40, ties)
        assert roc_auc(s, l) == pytest.approx(brute_force_auc(s, l), abs=1e-12)


def test_trapezoid_equals_rank_auc_100_instances():
    for seed in range(100):
        s, l = _instance(seed, 50, ties=seed % 2 == 0)
        assert abs(roc_curve(s, l).auc - roc_auc(s, l)) < 1e-12


def test_roc_curve_shape():
    c = roc_curve([0.9, 0.1], [True, False])
    assert c.points == [(0.0, 0.0), (0.0, 1.0), (1.0, 1.0)] and c.auc == 1.0
    assert roc_curve([0.1, 0.9], [True, False]).auc == 0.0


@given(st.integers(0, 10_000))
def test_roc_curve_monotone(seed):
    s, l = _instance(seed, 30, ties=True)
    c = roc_curve(s, l)
    assert c.points[0] == (0.0, 0.0) and c.points[-1] == (1.0, 1.0)
    assert np.all(np.diff(c.fpr) >= 0) and np.all(np.diff(c.tpr) >= 0)


@given(st.integers(0, 10_000))
def test_auc_invariant_under_increasing_transform(seed):
    s, l = _instance(seed, 30)
    a = roc_auc(s, l)
    assert roc_auc(np.exp(s), l) == pytest.approx(a, abs=1e-12)
    assert roc_auc(3 * s + 7, l) == pytest.approx(a, abs=1e-12)


@given(st.integers(0, 10_000))
def test_auc_complement(seed):
    s, l = _instance(seed, 30)
    assert roc_auc(s, l) + roc_auc(-s, l) == pytest.approx(1.0, abs=1e-12)


def test_max_f1_examples():
    assert max_f1([0.9, 0.1], [True, False])[0] == 1.0
    f1, thr, p, r = max_f1([5, 4, 3, 2, 1], [1, 0, 1, 0, 0])
    assert (f1, thr) == (pytest.approx(0.8), 3.0)
    assert (p, r) == (pytest.approx(2 / 3), 1.0)
    labels = np.array([1, 1] + [0] * 8, bool)
    for seed in range(10):
        assert max_f1(np.random.default_rng(seed).normal(size=10), labels)[0] >= 1 / 3 - 1e-12


def test_max_f1_no_positive():
    with pytest.raises(MetricError):
        max_f1([1, 2], [False, False])


def test_max_f1_matches_brute_force_up_to_100():
    for seed in range(60):
        n = 5 + (seed * 7) % 96
        s, l = _instance(seed, n, ties=seed % 3 == 0)
        assert max_f1(s, l)[0] == pytest.approx(brute_force_max_f1(s, l), abs=1e-12)


def test_f1_score():
    assert f1_score([True, False], [True, False]) == 1.0
    assert f1_score([False, False], [True, False]) == 0.0


def test_subspace_angle_examples():
    assert subspace_angle(np.eye(3)[:, :2], np.eye(3)[:, :2]) == (0.0, -16.0)
    assert subspace_angle([[1.0], [0.0]], [[0.0], [1.0]])[0] == pytest.approx(np.pi / 2)
    a = 0.3
    assert subspace_angle([[1.0], [0.0]], [[np.cos(a)], [np.sin(a)]])[0] == pytest.approx(a, abs=1e-12)


def test_subspace_angle_rank_deficient():
    with pytest.raises(MetricError):
        subspace_angle(np.array([[1.0, 2.0], [2.0, 4.0], [0.0, 0.0]]), np.eye(3)[:, :2])


@given(st.integers(0, 10_000))
def test_subspace_angle_symmetry_and_basis_invariance(seed):
    rng = np.random.default_rng(seed)
    B1, B2 = rng.normal(size=(6, 2)), rng.normal(size=(6, 2))
    Q, _ = np.linalg.qr(rng.normal(size=(2, 2)))
    t = subspace_angle(B1, B2)[0]
    assert subspace_angle(B2, B1)[0] == pytest.approx(t, abs=1e-10)
    assert subspace_angle(B1 @ Q, B2)[0] == pytest.approx(t, abs=1e-10)
    assert len(principal_angles(B1, B2)) == 2


def test_mse_examples():
    X = np.array([[1.0, 2.0]])
    assert mse(X, X) == 0
    assert mse([[0.0, 0.0]], [[3.0, 4.0]]) == 25
    assert mse([[0.0, 0.0], [0.0, 0.0]], [[1.0, 0.0], [0.0, 2.0]]) == 2.5
    with pytest.raises(MetricError):
        mse(X, np.zeros((2, 2)))


def test_evaluate_report():
    rep = evaluate([0.9, 0.1, 0.2], [True, False, False], np.eye(3)[:, :1], np.eye(3)[:, :1], val_mse=0.5)
    d = rep.to_dict()
    assert d["auc"] == 1.0 and d["max_f1"] == 1.0 and d["subspace_log_angle"] == -16.0 and d["val_mse"] == 0.5
