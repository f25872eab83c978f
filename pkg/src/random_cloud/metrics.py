"""Classification metrics and the exact Wilcoxon signed-rank test."""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import norm, rankdata

log = logging.getLogger(__name__)

# Paired differences are rounded to this many decimals before ranking so that
# e.g. 0.85 - 0.80 and 0.80 - 0.75 count as a tie.
DIFF_DECIMALS = 12
EXACT_MAX_N = 25


@dataclass
class MetricSet:
    accuracy: float
    macro_f1: float
    auc_roc: float
    reduction_percent: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class PairedTestResult:
    statistic: float
    p_value: float
    n_effective: int
    method_note: str
    w_plus: float = 0.0
    w_minus: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


def accuracy(pred, truth) -> float:
    pred, truth = np.asarray(pred), np.asarray(truth)
    if pred.shape != truth.shape or pred.size == 0:
        raise ValueError("pred and truth must be non-empty and of equal length")
    return float(np.count_nonzero(pred == truth)) / truth.size


def confusion_matrix(pred, truth, n_classes: int) -> np.ndarray:
    """Rows are true classes, columns predicted classes."""
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (np.asarray(truth), np.asarray(pred)), 1)
    return cm


def macro_f1(pred, truth, n_classes: int) -> float:
    """Unweighted mean of per-class F1; a class absent from both vectors scores 0."""
    pred, truth = np.asarray(pred), np.asarray(truth)
    if pred.shape != truth.shape:
        raise ValueError("pred and truth differ in length")
    cm = confusion_matrix(pred, truth, n_classes)
    tp = np.diag(cm).astype(float)
    denom = cm.sum(axis=0) + cm.sum(axis=1)  # 2TP + FP + FN
    f1 = np.divide(2 * tp, denom, out=np.zeros(n_classes), where=denom > 0)
    return float(f1.mean())


def binary_auc(scores, positive) -> float:
    """Mann-Whitney AUC; tied scores get half credit."""
    scores = np.asarray(scores, dtype=float)
    positive = np.asarray(positive, dtype=bool)
    n_pos = int(positive.sum())
    n_neg = positive.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs at least one positive and one negative")
    ranks = rankdata(scores)
    return float((ranks[positive].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def auc_roc(scores, truth, n_classes: int) -> float:
    """Binary: AUC of the class-1 score. Multiclass: macro one-vs-rest.

    ``scores`` holds one row of per-class outputs per sample (a 1-d array is
    taken as the class-1 score of a binary problem). One-vs-rest classes
    without positives or negatives in ``truth`` are skipped with a warning.
    """
    scores = np.asarray(scores, dtype=float)
    truth = np.asarray(truth)
    if scores.shape[0] != truth.shape[0]:
        raise ValueError("scores and truth differ in length")
    if n_classes == 2:
        s = scores if scores.ndim == 1 else scores[:, 1]
        return binary_auc(s, truth == 1)
    aucs = []
    for c in range(n_classes):
        pos = truth == c
        if pos.all() or not pos.any():
            log.warning("AUC for class %d undefined (no %s); excluded", c, "negatives" if pos.all() else "positives")
            continue
        aucs.append(binary_auc(scores[:, c], pos))
    return float(np.mean(aucs)) if aucs else float("nan")


def evaluate(outputs: np.ndarray, truth, n_classes: int, reduction: float = 0.0) -> MetricSet:
    pred = np.argmax(outputs, axis=1)
    return MetricSet(
        accuracy(pred, truth), macro_f1(pred, truth, n_classes), auc_roc(outputs, truth, n_classes), reduction
    )


def signed_rank_null(doubled_ranks: np.ndarray) -> np.ndarray:
    """Null counts of 2*W+ over all 2^n sign patterns, by dynamic programming.

    ``doubled_ranks`` are twice the (possibly averaged) ranks, hence integers;
    entry k of the result counts the sign patterns with 2*W+ == k.
    """
    total = int(doubled_ranks.sum())
    counts = np.zeros(total + 1, dtype=object)
    counts[0] = 1
    for r in doubled_ranks.astype(int):
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: total + 1 - r]
        counts = counts + shifted
    return counts


def wilcoxon_signed_rank(a, b) -> PairedTestResult:
    """Two-sided Wilcoxon signed-rank test of ``a - b``.

    Zero differences are dropped; if nothing is left, p = 1. Ties in |d| get
    average ranks. Up to 25 non-zero pairs the p-value is exact over the tied
    rank set; beyond that a tie-corrected normal approximation is used.
    """
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("a and b must be 1-d and of equal length")
    if not 2 <= a.size <= 50:
        raise ValueError("need between 2 and 50 pairs")
    d = np.round(a - b, DIFF_DECIMALS)
    d = d[d != 0]
    n = d.size
    if n == 0:
        return PairedTestResult(0.0, 1.0, 0, "all differences zero")
    ranks = rankdata(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    w_minus = float(ranks[d < 0].sum())
    stat = min(w_plus, w_minus)
    doubled = np.rint(2 * ranks).astype(np.int64)
    total = int(doubled.sum())
    obs = int(doubled[d > 0].sum())
    if n <= EXACT_MAX_N:
        counts = signed_rank_null(doubled)
        k = np.arange(total + 1)
        extreme = np.abs(2 * k - total) >= abs(2 * obs - total)
        p = float(counts[extreme].sum() / 2**n)
        note = "exact, zeros dropped"
    else:
        mean = n * (n + 1) / 4
        _, tie_counts = np.unique(np.abs(d), return_counts=True)
        var = n * (n + 1) * (2 * n + 1) / 24 - np.sum(tie_counts**3 - tie_counts) / 48
        z = (abs(w_plus - mean)) / math.sqrt(var)
        p = float(min(1.0, 2 * norm.sf(z)))
        note = "normal approximation, zeros dropped"
    return PairedTestResult(stat, min(p, 1.0), n, note, w_plus, w_minus)
