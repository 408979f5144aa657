"""Point-cloud preprocessing and partition scoring utilities.

Covers the preprocessing used on real data: Gaussian affinities, mutual
k-nearest-neighbor sparsification, low-degree vertex removal, and the
metrics that score recovered clusters against ground truth.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .generators import Partition
from .graph import (GraphError, SparseGraph, graph_from_arrays,
                    induced_subgraph)


class PipelineError(ValueError):
    """Invalid preprocessing input."""


def as_point_cloud(points) -> np.ndarray:
    """Validate an (n, d) array of finite 64-bit points, n >= 2."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2:
        raise PipelineError(f"points must be 2-D, got shape {pts.shape}")
    if pts.shape[0] < 2:
        raise PipelineError("need at least two points")
    if not np.all(np.isfinite(pts)):
        raise PipelineError("points contain non-finite entries")
    return pts


def gaussian_affinity(points, sigma: float) -> np.ndarray:
    """Affinity matrix ``A_ij = exp(-||x_i - x_j||^2 / sigma^2)``.

    Symmetric with zero diagonal; off-diagonal entries in (0, 1].
    """
    if not sigma > 0:
        raise PipelineError(f"sigma must be positive, got {sigma}")
    pts = as_point_cloud(points)
    sq = np.sum(pts ** 2, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (pts @ pts.T)
    np.maximum(d2, 0.0, out=d2)
    if not np.all(np.isfinite(d2)):
        raise PipelineError("non-finite pairwise distance")
    aff = np.exp(-d2 / sigma ** 2)
    aff = 0.5 * (aff + aff.T)  # exact symmetry despite rounding
    np.fill_diagonal(aff, 0.0)
    return aff


def knn_sparsify(affinity, k: int) -> SparseGraph:
    """OR-symmetrized k-nearest-neighbor graph from an affinity matrix.

    Edge {i, j} is kept iff j is among the k strongest affinities of i or
    vice versa, with the affinity as weight. Ties at the k-th neighbor are
    broken toward the lower index, so the construction is deterministic.
    Every vertex ends with unweighted degree >= min(k, n - 1).
    """
    aff = np.asarray(affinity, dtype=np.float64)
    n = aff.shape[0]
    if aff.ndim != 2 or aff.shape[1] != n:
        raise PipelineError(f"affinity must be square, got {aff.shape}")
    if not 1 <= k < n:
        raise PipelineError(f"k must lie in [1, {n - 1}], got {k}")
    if np.any(aff < 0):
        raise PipelineError("affinities must be nonnegative")
    masked = aff.copy()
    np.fill_diagonal(masked, -np.inf)
    # stable sort on -affinity: equal affinities keep ascending index order
    order = np.argsort(-masked, axis=1, kind="stable")
    neighbors = order[:, :k]
    rows = np.repeat(np.arange(n), k)
    cols = neighbors.ravel()
    a = np.minimum(rows, cols)
    b = np.maximum(rows, cols)
    pairs = np.unique(np.stack([a, b], axis=1), axis=0)
    weights = aff[pairs[:, 0], pairs[:, 1]]
    if np.any(weights <= 0):
        raise PipelineError(
            "a selected nearest neighbor has zero affinity; the k-NN graph "
            "needs strictly positive affinities"
        )
    return graph_from_arrays(n, pairs[:, 0], pairs[:, 1], weights)


@dataclass
class ThresholdResult:
    graph: SparseGraph
    kept: np.ndarray
    second_pass_would_drop: bool  # some kept vertex fell below the threshold


def degree_threshold(graph: SparseGraph, d_thresh: float) -> ThresholdResult:
    """Drop vertices whose degree in the input graph is below ``d_thresh``.

    One pass only: degrees are measured in the original graph, and the
    survivors' induced subgraph is returned even if removal dragged some
    of them below the threshold (that situation is reported). Use
    :func:`degree_threshold_iterated` to repeat to a fixpoint.
    """
    if d_thresh < 0:
        raise PipelineError("degree threshold must be nonnegative")
    kept = np.flatnonzero(graph.degrees >= d_thresh)
    if kept.size == 0:
        raise PipelineError(
            f"degree threshold {d_thresh} drops every vertex"
        )
    if kept.size == graph.n:
        return ThresholdResult(graph=graph, kept=kept,
                               second_pass_would_drop=False)
    sub = induced_subgraph(graph, kept)
    again = bool(np.any(sub.graph.degrees < d_thresh))
    return ThresholdResult(graph=sub.graph, kept=kept,
                           second_pass_would_drop=again)


def degree_threshold_iterated(graph: SparseGraph, d_thresh: float
                              ) -> ThresholdResult:
    """Repeat :func:`degree_threshold` until no vertex falls below it."""
    kept = np.arange(graph.n)
    result = degree_threshold(graph, d_thresh)
    kept = kept[result.kept]
    while result.second_pass_would_drop:
        result = degree_threshold(result.graph, d_thresh)
        kept = kept[result.kept]
    return ThresholdResult(graph=result.graph, kept=kept,
                           second_pass_would_drop=False)


def misclassification(found, truth) -> float:
    """Fraction of a recovered cluster falling outside the true one:
    ``|found \\ truth| / |found|``."""
    found = np.unique(np.asarray(found, dtype=np.int64))
    truth = np.unique(np.asarray(truth, dtype=np.int64))
    if found.size == 0:
        raise PipelineError("recovered cluster is empty")
    stray = np.setdiff1d(found, truth, assume_unique=True)
    return stray.size / found.size


def confusion_matrix(a: Partition, b: Partition) -> np.ndarray:
    if a.n != b.n:
        raise PipelineError(
            f"partitions cover {a.n} and {b.n} vertices"
        )
    counts = np.zeros((a.k, b.k), dtype=np.int64)
    np.add.at(counts, (a.assignment, b.assignment), 1)
    return counts


def partition_accuracy(a: Partition, b: Partition):
    """Accuracy of partition ``a`` against ``b`` under optimal label
    matching (Hungarian assignment on the confusion matrix; exact).

    A cluster-count mismatch is handled by padding with empty clusters.
    Returns ``(accuracy, confusion_matrix)``.
    """
    counts = confusion_matrix(a, b)
    size = max(a.k, b.k)
    padded = np.zeros((size, size), dtype=np.int64)
    padded[:a.k, :b.k] = counts
    rows, cols = linear_sum_assignment(padded, maximize=True)
    matched = int(padded[rows, cols].sum())
    return matched / a.n, counts
