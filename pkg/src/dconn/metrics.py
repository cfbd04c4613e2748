"""Clustering scores against ground truth, and graph size."""

from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment

__all__ = ["contingency", "clustering_accuracy", "rand_index", "edge_count"]


def _check(pred, truth, min_n=1):
    pred = np.asarray(pred).reshape(-1)
    truth = np.asarray(truth).reshape(-1)
    if pred.shape != truth.shape:
        raise ValueError(f"label vectors differ in length: {pred.size} vs {truth.size}")
    if pred.size < min_n:
        raise ValueError(f"need at least {min_n} labels, got {pred.size}")
    return pred, truth


def contingency(pred, truth) -> np.ndarray:
    """Counts table, rows = predicted classes, columns = true classes."""
    _, p = np.unique(pred, return_inverse=True)
    _, t = np.unique(truth, return_inverse=True)
    table = np.zeros((p.max() + 1, t.max() + 1), dtype=np.int64)
    np.add.at(table, (p, t), 1)
    return table


def clustering_accuracy(pred, truth) -> float:
    """Percentage of points correct under the best one-to-one class matching.

    Classes left unmatched (when the two labelings have different numbers of
    classes) count as wrong.
    """
    pred, truth = _check(pred, truth)
    table = contingency(pred, truth)
    rows, cols = linear_sum_assignment(table, maximize=True)
    return 100.0 * table[rows, cols].sum() / pred.size


def rand_index(pred, truth) -> float:
    """Fraction of point pairs on which the two labelings agree."""
    pred, truth = _check(pred, truth, min_n=2)
    n = pred.size
    table = contingency(pred, truth)
    pairs = n * (n - 1) / 2

    def c2(x):
        x = np.asarray(x, dtype=float)
        return (x * (x - 1) / 2).sum()

    both = c2(table)
    same_pred = c2(table.sum(axis=1))
    same_truth = c2(table.sum(axis=0))
    agree = pairs + 2 * both - same_pred - same_truth
    return float(agree / pairs)


def edge_count(g) -> int:
    """Number of unordered pairs ``p < q`` with positive weight."""
    w = np.asarray(getattr(g, "weights", g))
    return int(np.count_nonzero(np.triu(w, 1) > 0))
