"""Spectral clustering baseline: dense eigensolve plus seeded k-means."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .generators import Partition, substream
from .graph import GraphError, SparseGraph

DENSE_EIGENSOLVE_BUDGET = 5000


@dataclass(frozen=True)
class KMeansConfig:
    k: int
    max_iter: int = 100
    restarts: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise GraphError("k must be at least 1")
        if self.max_iter < 1:
            raise GraphError("max_iter must be at least 1")
        if self.restarts < 1:
            raise GraphError("restarts must be at least 1")


def _kmeanspp_init(points, k, rng):
    n = points.shape[0]
    centroids = np.empty((k, points.shape[1]))
    centroids[0] = points[rng.integers(n)]
    dist2 = np.sum((points - centroids[0]) ** 2, axis=1)
    for c in range(1, k):
        total = dist2.sum()
        if total <= 0:
            centroids[c] = points[rng.integers(n)]
        else:
            centroids[c] = points[rng.choice(n, p=dist2 / total)]
        dist2 = np.minimum(dist2, np.sum((points - centroids[c]) ** 2, axis=1))
    return centroids


def _sq_dists(points, centroids):
    return (np.sum(points ** 2, axis=1)[:, None]
            - 2.0 * points @ centroids.T
            + np.sum(centroids ** 2, axis=1)[None, :])


def _lloyd(points, centroids, max_iter, wcss_history=None):
    n, k = points.shape[0], centroids.shape[0]
    labels = np.full(n, -1, dtype=np.int64)
    for _ in range(max_iter):
        d2 = _sq_dists(points, centroids)
        new_labels = np.argmin(d2, axis=1)
        min_d2 = d2[np.arange(n), new_labels]
        if wcss_history is not None:
            wcss_history.append(float(min_d2.sum()))
        for c in range(k):
            members = new_labels == c
            if not members.any():
                # re-seed an emptied centroid from the farthest point
                far = int(np.argmax(min_d2))
                centroids[c] = points[far]
                new_labels[far] = c
                min_d2[far] = 0.0
                members = new_labels == c
            centroids[c] = points[members].mean(axis=0)
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    d2 = _sq_dists(points, centroids)
    labels = np.argmin(d2, axis=1)
    wcss = float(d2[np.arange(n), labels].sum())
    if wcss_history is not None:
        wcss_history.append(wcss)
    return labels, centroids, wcss


def kmeans(points, cfg: KMeansConfig, wcss_history=None):
    """Seeded k-means++ with Lloyd iterations; best of ``restarts`` by WCSS.

    Returns ``(labels, centroids)``. Lloyd runs to an assignment fixpoint
    or ``max_iter``; a cluster emptied during an update is re-seeded from
    the point farthest from its assigned centroid. ``wcss_history``, if
    given, collects one per-iteration WCSS list per restart.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points[:, None]
    n = points.shape[0]
    if n < cfg.k:
        raise GraphError(f"k-means needs at least k={cfg.k} points, got {n}")
    best = None
    for restart in range(cfg.restarts):
        rng = substream(cfg.seed, restart)
        init = _kmeanspp_init(points, cfg.k, rng)
        history = [] if wcss_history is not None else None
        labels, centroids, wcss = _lloyd(points, init.copy(), cfg.max_iter,
                                         wcss_history=history)
        if wcss_history is not None:
            wcss_history.append(history)
        if best is None or wcss < best[2]:
            best = (labels, centroids, wcss)
    return best[0], best[1]


def spectral_clustering(graph: SparseGraph, k: int, seed: int = 0,
                        kmeans_config: KMeansConfig | None = None) -> Partition:
    """Classic spectral clustering on ``D^{-1/2} A D^{-1/2}``.

    Takes the eigenvectors of the k largest eigenvalues, row-normalizes
    them, and clusters the rows with seeded k-means; deterministic given
    (graph, k, seed). Dense eigensolve, so n is capped at
    ``DENSE_EIGENSOLVE_BUDGET``.
    """
    n = graph.n
    if n > DENSE_EIGENSOLVE_BUDGET:
        raise GraphError(
            f"spectral clustering uses a dense eigensolve; n={n} exceeds "
            f"the budget {DENSE_EIGENSOLVE_BUDGET}"
        )
    if graph.isolated_vertices().size:
        raise GraphError("spectral clustering requires all degrees positive")
    if k < 1 or k > n:
        raise GraphError(f"k={k} outside [1, {n}]")
    d_half = 1.0 / np.sqrt(graph.degrees)
    m = graph.to_scipy().toarray()
    m *= d_half[:, None]
    m *= d_half[None, :]
    eigvals, eigvecs = np.linalg.eigh(m)
    u = eigvecs[:, -k:]  # k largest eigenvalues
    norms = np.linalg.norm(u, axis=1)
    zero_rows = np.flatnonzero(norms == 0.0)
    if zero_rows.size:
        warnings.warn(f"{zero_rows.size} zero rows in the eigenvector matrix",
                      RuntimeWarning)
    safe = np.where(norms == 0.0, 1.0, norms)
    v = u / safe[:, None]
    v[zero_rows] = 0.0
    cfg = kmeans_config or KMeansConfig(k=k, seed=seed)
    if cfg.k != k:
        raise GraphError(f"kmeans_config.k={cfg.k} disagrees with k={k}")
    labels, centroids = kmeans(v, cfg)
    if zero_rows.size:
        # unnormalizable rows: nearest centroid of the raw coordinates
        labels[zero_rows] = np.argmin(_sq_dists(u[zero_rows], centroids), axis=1)
    used = np.unique(labels)
    if used.size != k:
        # k-means can return fewer populated clusters; compact the labels
        remap = np.zeros(k, dtype=np.int64)
        remap[used] = np.arange(used.size)
        labels = remap[labels]
        return Partition(labels, int(used.size))
    return Partition(labels, k)
