"""Scikit-learn style estimators wrapping the pursuit algorithms.

These classes follow the sklearn contract (constructor stores parameters
untouched, ``fit`` sets trailing-underscore attributes and returns self,
``get_params``/``set_params`` work via BaseEstimator) so the algorithms
compose with pipelines, model selection and ``clone``. ``X`` is an
adjacency matrix: a SparseGraph, a scipy sparse matrix or a dense array.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin

from .baselines import KMeansConfig, spectral_clustering
from .generators import Partition
from .graph import (GraphError, LaplacianView, SparseGraph, drop_isolated,
                    graph_from_adjacency)
from .pursuit import (OMEGA_FACTOR_DEFAULT, ScpConfig, cocluster, iscp, scp)


def validate_adjacency(X, drop_isolated_vertices=False):
    """Coerce estimator input into a SparseGraph and its Laplacian.

    Returns ``(graph, laplacian, kept)`` where ``kept`` maps Laplacian
    vertex ids back to positions in X (identity unless isolated vertices
    were dropped).
    """
    graph = graph_from_adjacency(X)
    kept = np.arange(graph.n)
    if drop_isolated_vertices and graph.isolated_vertices().size:
        graph, kept = drop_isolated(graph)
    return graph, LaplacianView(graph), kept


class SingleClusterPursuit(BaseEstimator):
    """Recover the cluster containing one seed vertex.

    Parameters mirror :class:`~scpursuit.pursuit.ScpConfig`:
    ``cluster_size`` is the estimated size of the target cluster and
    ``omega_factor`` sizes the thresholded candidate set. After ``fit``,
    ``labels_`` is 1 on the recovered cluster and 0 elsewhere.
    """

    def __init__(self, cluster_size=2, seed_vertex=0,
                 omega_factor=OMEGA_FACTOR_DEFAULT, drop_isolated=False):
        self.cluster_size = cluster_size
        self.seed_vertex = seed_vertex
        self.omega_factor = omega_factor
        self.drop_isolated = drop_isolated

    def fit(self, X, y=None):
        graph, lap, kept = validate_adjacency(X, self.drop_isolated)
        position = np.flatnonzero(kept == self.seed_vertex)
        if position.size == 0:
            raise GraphError(
                f"seed vertex {self.seed_vertex} was dropped as isolated"
            )
        cfg = ScpConfig(seed_vertex=int(position[0]),
                        n0_hat=self.cluster_size,
                        omega_factor=self.omega_factor)
        result = scp(lap, cfg)
        self.result_ = result
        self.cluster_indices_ = kept[result.cluster]
        size = X.n if isinstance(X, SparseGraph) else X.shape[0]
        labels = np.zeros(size, dtype=np.int64)
        labels[self.cluster_indices_] = 1
        self.labels_ = labels
        return self

    def fit_predict(self, X, y=None):
        return self.fit(X).labels_


class IteratedClusterPursuit(BaseEstimator, ClusterMixin):
    """Full partition by repeatedly peeling off clusters.

    ``cluster_sizes`` is a single estimated size or one size per cluster
    (the last cluster is the remainder). ``labels_`` holds the partition;
    vertices isolated mid-run get the extra trailing label.
    """

    def __init__(self, cluster_sizes=2, omega_factor=OMEGA_FACTOR_DEFAULT,
                 drop_isolated=False):
        self.cluster_sizes = cluster_sizes
        self.omega_factor = omega_factor
        self.drop_isolated = drop_isolated

    def fit(self, X, y=None):
        graph, lap, kept = validate_adjacency(X, self.drop_isolated)
        result = iscp(lap, self.cluster_sizes, omega_factor=self.omega_factor)
        self.result_ = result
        size = X.n if isinstance(X, SparseGraph) else X.shape[0]
        labels = np.full(size, result.partition.k, dtype=np.int64)
        labels[kept] = result.partition.assignment
        self.labels_ = labels
        self.n_clusters_ = int(np.unique(labels).size)
        return self


class SpectralClusteringBaseline(BaseEstimator, ClusterMixin):
    """Dense spectral clustering on D^{-1/2} A D^{-1/2} with seeded k-means."""

    def __init__(self, n_clusters=2, random_state=0, kmeans_max_iter=100,
                 kmeans_restarts=5):
        self.n_clusters = n_clusters
        self.random_state = random_state
        self.kmeans_max_iter = kmeans_max_iter
        self.kmeans_restarts = kmeans_restarts

    def fit(self, X, y=None):
        graph, _, _ = validate_adjacency(X)
        cfg = KMeansConfig(k=self.n_clusters, max_iter=self.kmeans_max_iter,
                           restarts=self.kmeans_restarts,
                           seed=self.random_state)
        part = spectral_clustering(graph, self.n_clusters,
                                   seed=self.random_state, kmeans_config=cfg)
        self.partition_ = part
        self.labels_ = part.assignment
        return self


class CoClusterPursuit(BaseEstimator):
    """Simultaneous row/column clustering of a nonnegative matrix.

    ``fit(B)`` sets ``row_labels_`` and ``column_labels_`` (the naming
    follows sklearn's biclustering estimators).
    """

    def __init__(self, n_clusters=2, row_cluster_size=2,
                 omega_factor=OMEGA_FACTOR_DEFAULT):
        self.n_clusters = n_clusters
        self.row_cluster_size = row_cluster_size
        self.omega_factor = omega_factor

    def fit(self, X, y=None):
        result = cocluster(X, n0x_hat=self.row_cluster_size,
                           k=self.n_clusters,
                           omega_factor=self.omega_factor)
        self.result_ = result
        self.row_labels_ = result.row_partition.assignment
        self.column_labels_ = result.col_partition.assignment
        return self
