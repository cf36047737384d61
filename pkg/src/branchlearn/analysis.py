"""Correlation diagnostics for trained connectomes.

The class-difference correlation matrix R contrasts second-order input
statistics of the two classes; ranking its unique entries gives an ordering
against which each dendrite's weight-correlation entries can be projected.
After training, a neuron's projection mass should concentrate at the ranks
its class dominates.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CorrelationRanking:
    order: np.ndarray    # (n_pairs, 2) row/col indices, best rank first
    values: np.ndarray   # R values in ranked order
    d: int

    @property
    def n_pairs(self) -> int:
        return self.order.shape[0]


def class_difference_matrix(X: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Mean outer product of class-(+) patterns minus that of class (-)."""
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels)
    plus = X[labels == 1]
    minus = X[labels == 0]
    if len(plus) == 0 or len(minus) == 0:
        raise ValueError("both classes must be non-empty")
    return plus.T @ plus / len(plus) - minus.T @ minus / len(minus)


def input_correlation_ranking(X: np.ndarray, labels: np.ndarray) -> CorrelationRanking:
    """Rank the d(d+1)/2 unique entries of R by descending value.

    Ties break lexicographically on (row, col), which makes the ranking a
    deterministic permutation of all unique index pairs.
    """
    R = class_difference_matrix(X, labels)
    d = R.shape[0]
    rows, cols = np.triu_indices(d)
    vals = R[rows, cols]
    # stable sort on (-value, row, col)
    order = np.lexsort((cols, rows, -vals))
    pairs = np.stack([rows[order], cols[order]], axis=1)
    return CorrelationRanking(order=pairs, values=vals[order], d=d)


def weight_vector(table_row_or_table: np.ndarray, d: int) -> np.ndarray:
    """Integer weight vector (contact counts per afferent) of a branch."""
    return np.bincount(np.asarray(table_row_or_table).ravel(), minlength=d)


def weight_correlation_projection(table: np.ndarray, ranking: CorrelationRanking):
    """Project each dendrite's weight outer product onto the ranking order.

    Returns (per_dendrite, histogram): per_dendrite has shape (m, n_pairs)
    with entry [j, r] = W_j[row_r] * W_j[col_r]; histogram is the per-rank sum
    over dendrites.
    """
    table = np.asarray(table)
    m = table.shape[0]
    rows = ranking.order[:, 0]
    cols = ranking.order[:, 1]
    per_dendrite = np.zeros((m, ranking.n_pairs))
    for j in range(m):
        w = weight_vector(table[j], ranking.d)
        per_dendrite[j] = w[rows] * w[cols]
    return per_dendrite, per_dendrite.sum(axis=0)


def concentration_statistic(histogram: np.ndarray) -> float:
    """Mass-weighted mean rank of a projection histogram (lower = earlier ranks)."""
    histogram = np.asarray(histogram, dtype=np.float64)
    total = histogram.sum()
    if total == 0:
        raise ValueError("histogram has no mass")
    ranks = np.arange(histogram.size)
    return float((ranks * histogram).sum() / total)
