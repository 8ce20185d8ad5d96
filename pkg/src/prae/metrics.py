"""ROC/AUC, F1, principal subspace angles and reconstruction MSE.

Scores follow one orientation throughout: higher means more anomalous,
and a label of ``True`` marks an anomaly.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import rankdata

LOG10_ANGLE_FLOOR = -16.0


class MetricError(ValueError):
    pass


@dataclass
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray
    auc: float

    @property
    def points(self):
        return list(zip(self.fpr.tolist(), self.tpr.tolist()))


@dataclass
class EvalReport:
    auc: float
    max_f1: float
    best_threshold: float
    precision: float
    recall: float
    subspace_angle: float | None = None
    subspace_log_angle: float | None = None
    val_mse: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def _check_scores_labels(scores, labels):
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels).astype(bool).ravel()
    if scores.shape != labels.shape:
        raise MetricError(f"scores ({scores.shape[0]}) and labels ({labels.shape[0]}) differ in length")
    if not np.all(np.isfinite(scores)):
        raise MetricError("scores must be finite")
    return scores, labels


def roc_auc(scores, labels) -> float:
    """Mann-Whitney AUC from rank sums; ties earn half credit."""
    scores, labels = _check_scores_labels(scores, labels)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise MetricError("AUC needs at least one anomaly and one normal label")
    ranks = rankdata(scores)
    u = ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def roc_curve(scores, labels) -> RocCurve:
    scores, labels = _check_scores_labels(scores, labels)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise MetricError("ROC needs at least one anomaly and one normal label")
    order = np.argsort(-scores, kind="mergesort")
    s, y = scores[order], labels[order]
    # last index of each run of equal scores
    cut = np.r_[np.flatnonzero(np.diff(s)), s.size - 1]
    tp = np.cumsum(y)[cut]
    fp = (cut + 1) - tp
    tpr = np.r_[0.0, tp / n_pos]
    fpr = np.r_[0.0, fp / n_neg]
    thresholds = np.r_[np.inf, s[cut]]
    auc = float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))
    return RocCurve(fpr, tpr, thresholds, auc)


def max_f1(scores, labels):
    """Best F1 over thresholds ``t`` with anomalies predicted at ``score >= t``.

    Returns ``(f1, threshold, precision, recall)``.
    """
    scores, labels = _check_scores_labels(scores, labels)
    n_pos = int(labels.sum())
    if n_pos == 0:
        raise MetricError("F1 needs at least one anomaly label")
    order = np.argsort(-scores, kind="mergesort")
    s, y = scores[order], labels[order]
    cut = np.r_[np.flatnonzero(np.diff(s)), s.size - 1]
    tp = np.cumsum(y)[cut].astype(np.float64)
    predicted = (cut + 1).astype(np.float64)
    precision = tp / predicted
    recall = tp / n_pos
    with np.errstate(invalid="ignore", divide="ignore"):
        f1 = np.where(tp > 0, 2 * precision * recall / (precision + recall), 0.0)
    best = int(np.argmax(f1))
    return float(f1[best]), float(s[cut[best]]), float(precision[best]), float(recall[best])


def f1_score(predicted, labels) -> float:
    predicted = np.asarray(predicted, dtype=bool)
    labels = np.asarray(labels, dtype=bool)
    tp = np.sum(predicted & labels)
    if tp == 0:
        return 0.0
    precision = tp / predicted.sum()
    recall = tp / labels.sum()
    return float(2 * precision * recall / (precision + recall))


def principal_angles(B1, B2) -> np.ndarray:
    """All principal angles (radians, ascending) between the column spans of B1 and B2."""
    Q1, Q2 = _orthonormalize(B1), _orthonormalize(B2)
    M = Q1.T @ Q2
    cos = np.linalg.svd(M, compute_uv=False)
    if Q1.shape[1] != Q2.shape[1]:
        return np.sort(np.arccos(np.clip(cos, -1.0, 1.0)))
    # arccos is ill-conditioned near 0; the sines from the complement part of Q2
    # resolve small angles down to rounding level (cos descending pairs with sin ascending)
    sin = np.sort(np.linalg.svd(Q2 - Q1 @ M, compute_uv=False))
    return np.arctan2(sin, np.clip(cos, 0.0, 1.0))


def _orthonormalize(B) -> np.ndarray:
    B = np.asarray(B, dtype=np.float64)
    if B.ndim == 1:
        B = B[:, None]
    u, s, _ = np.linalg.svd(B, full_matrices=False)
    tol = max(B.shape) * np.finfo(np.float64).eps * (s[0] if s.size else 0.0)
    if s.size == 0 or s[-1] <= tol:
        raise MetricError("basis is rank deficient")
    return u


def subspace_angle(B1, B2):
    """Largest principal angle and its log10 (floored at -16 for a zero angle)."""
    theta = float(principal_angles(B1, B2)[-1])
    log_theta = float(np.log10(theta)) if theta > 0 else LOG10_ANGLE_FLOOR
    return theta, max(log_theta, LOG10_ANGLE_FLOOR)


def mse(X, X_hat) -> float:
    X = np.asarray(X, dtype=np.float64)
    X_hat = np.asarray(X_hat, dtype=np.float64)
    if X.shape != X_hat.shape:
        raise MetricError(f"shape mismatch {X.shape} vs {X_hat.shape}")
    return float(np.mean(np.sum((X - X_hat) ** 2, axis=1)))


def evaluate(scores, labels, basis_true=None, basis_est=None, val_mse=None) -> EvalReport:
    f1, thr, p, r = max_f1(scores, labels)
    report = EvalReport(roc_auc(scores, labels), f1, thr, p, r, val_mse=val_mse)
    if basis_true is not None and basis_est is not None:
        report.subspace_angle, report.subspace_log_angle = subspace_angle(basis_true, basis_est)
    return report
