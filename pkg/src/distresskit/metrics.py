"""Minority-class metrics: confusion counts, P/R/F1, and rank-based ROC-AUC.

Label 1 (the minority) is the positive class throughout.  Zero
denominators follow the reporting convention precision = 0 when no
positive predictions exist, recall = 0 when no positives exist, and
f1 = 0 when precision + recall = 0, so reports are always well-formed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from distresskit.errors import DataError


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def to_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn}


@dataclass(frozen=True)
class MetricsReport:
    precision: float
    recall: float
    f1: float
    roc_auc: float
    threshold: float
    confusion: ConfusionMatrix
    n_rows: int
    n_positive: int

    def to_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "roc_auc": self.roc_auc,
            "threshold": self.threshold,
            "confusion": self.confusion.to_dict(),
            "n_rows": self.n_rows,
            "n_positive": self.n_positive,
        }


def _check_scores_labels(scores: np.ndarray, labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise DataError(
            f"scores and labels must be 1-D and same length, "
            f"got {scores.shape} vs {labels.shape}"
        )
    if not np.all(np.isfinite(scores)):
        raise DataError("scores contain non-finite values")
    return scores, labels.astype(np.int64)


def confusion_at_threshold(
    scores: np.ndarray, labels: np.ndarray, threshold: float
) -> ConfusionMatrix:
    """Predict 1 iff score >= threshold, then tally exactly."""
    scores, labels = _check_scores_labels(scores, labels)
    pred = scores >= threshold
    pos = labels == 1
    tp = int(np.count_nonzero(pred & pos))
    fp = int(np.count_nonzero(pred & ~pos))
    fn = int(np.count_nonzero(~pred & pos))
    tn = int(np.count_nonzero(~pred & ~pos))
    return ConfusionMatrix(tp=tp, fp=fp, tn=tn, fn=fn)


def precision_recall_f1(cm: ConfusionMatrix) -> tuple[float, float, float]:
    precision = cm.tp / (cm.tp + cm.fp) if cm.tp + cm.fp > 0 else 0.0
    recall = cm.tp / (cm.tp + cm.fn) if cm.tp + cm.fn > 0 else 0.0
    f1 = (
        2.0 * precision * recall / (precision + recall)
        if precision + recall > 0
        else 0.0
    )
    return precision, recall, f1


def roc_auc(scores: np.ndarray, labels: np.ndarray) -> float:
    """Mann-Whitney rank statistic with average ranks on ties.

    AUC = (sum of positive ranks - n_pos(n_pos+1)/2) / (n_pos * n_neg),
    i.e. the probability that a random positive outranks a random
    negative, ties counted half.
    """
    scores, labels = _check_scores_labels(scores, labels)
    n_pos = int(np.count_nonzero(labels == 1))
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DataError("roc_auc requires both classes present")
    ranks = _average_ranks(scores)
    rank_sum = float(ranks[labels == 1].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def _average_ranks(scores: np.ndarray) -> np.ndarray:
    """1-based ranks; tied values share the mean of their rank block."""
    n = scores.size
    order = np.argsort(scores, kind="mergesort")
    s_sorted = scores[order]
    new_group = np.empty(n, dtype=bool)
    new_group[0] = True
    new_group[1:] = s_sorted[1:] != s_sorted[:-1]
    group_id = np.cumsum(new_group) - 1
    counts = np.bincount(group_id)
    first_rank = np.concatenate([[0], np.cumsum(counts[:-1])]) + 1.0
    mean_rank = first_rank + (counts - 1) / 2.0
    ranks = np.empty(n)
    ranks[order] = mean_rank[group_id]
    return ranks


def roc_curve_points(
    scores: np.ndarray, labels: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """(fpr, tpr) staircase over thresholds at each distinct score, plus (0,0).

    Thresholds sweep from +inf down; tied scores enter together, so the
    trapezoid area under these points equals the rank-statistic AUC.
    """
    scores, labels = _check_scores_labels(scores, labels)
    n_pos = int(np.count_nonzero(labels == 1))
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DataError("roc curve requires both classes present")
    order = np.argsort(-scores, kind="mergesort")
    s_desc = scores[order]
    y_desc = labels[order]
    cum_tp = np.cumsum(y_desc == 1)
    cum_fp = np.cumsum(y_desc == 0)
    # keep only the last index of each tied block
    block_end = np.empty(s_desc.size, dtype=bool)
    block_end[:-1] = s_desc[1:] != s_desc[:-1]
    block_end[-1] = True
    tpr = np.concatenate([[0.0], cum_tp[block_end] / n_pos])
    fpr = np.concatenate([[0.0], cum_fp[block_end] / n_neg])
    return fpr, tpr


def evaluate_scores(
    scores: np.ndarray, labels: np.ndarray, threshold: float = 0.5
) -> MetricsReport:
    """Full minority-class report at one decision threshold."""
    cm = confusion_at_threshold(scores, labels, threshold)
    precision, recall, f1 = precision_recall_f1(cm)
    auc = roc_auc(scores, labels)
    labels_arr = np.asarray(labels)
    return MetricsReport(
        precision=precision,
        recall=recall,
        f1=f1,
        roc_auc=auc,
        threshold=float(threshold),
        confusion=cm,
        n_rows=int(labels_arr.size),
        n_positive=int(np.count_nonzero(labels_arr == 1)),
    )
