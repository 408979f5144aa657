"""Shared fixtures and independent oracles used across the test suite."""

import numpy as np
import pytest

from scpursuit import SparseGraph, build_graph


def dense_laplacian(graph: SparseGraph) -> np.ndarray:
    """Independent dense random-walk Laplacian built straight from the
    definition (L_ij = delta_ij - A_ij / d_i); the oracle route for every
    operator test."""
    n = graph.n
    adj = np.zeros((n, n))
    for i in range(n):
        adj[i, graph.neighbors(i)] = graph.neighbor_weights(i)
    degrees = adj.sum(axis=1)
    assert np.all(degrees > 0)
    return np.eye(n) - adj / degrees[:, None]


@pytest.fixture
def k3():
    return build_graph(3, [(0, 1), (1, 2), (0, 2)])


@pytest.fixture
def path3():
    return build_graph(3, [(0, 1), (1, 2)])


@pytest.fixture
def two_k3s():
    return build_graph(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])


@pytest.fixture
def two_edges():
    return build_graph(4, [(0, 1), (2, 3)])
