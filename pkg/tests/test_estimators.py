import numpy as np
import numpy.testing as npt
import pytest
import scipy.sparse as sp
from sklearn.base import clone

from scpursuit import (CoClusterPursuit, GraphError, IteratedClusterPursuit,
                       Partition, SingleClusterPursuit,
                       SpectralClusteringBaseline, partition_accuracy)


@pytest.fixture
def two_k3_adjacency(two_k3s):
    return two_k3s.to_scipy().toarray()


class TestSingleClusterPursuit:
    @pytest.mark.parametrize("convert", [
        lambda a: a,
        lambda a: sp.csr_array(a),
        lambda a: sp.csr_matrix(a),
    ])
    def test_accepts_matrix_types(self, two_k3_adjacency, convert):
        est = SingleClusterPursuit(cluster_size=3, seed_vertex=0)
        labels = est.fit_predict(convert(two_k3_adjacency))
        npt.assert_array_equal(labels, [1, 1, 1, 0, 0, 0])
        npt.assert_array_equal(est.cluster_indices_, [0, 1, 2])

    def test_accepts_sparse_graph(self, two_k3s):
        est = SingleClusterPursuit(cluster_size=3, seed_vertex=3)
        labels = est.fit_predict(two_k3s)
        npt.assert_array_equal(labels, [0, 0, 0, 1, 1, 1])

    def test_get_set_params_roundtrip(self):
        est = SingleClusterPursuit(cluster_size=7, seed_vertex=2)
        params = est.get_params()
        assert params["cluster_size"] == 7
        est.set_params(cluster_size=9)
        assert est.cluster_size == 9

    def test_clone_compatible(self):
        est = SingleClusterPursuit(cluster_size=5, omega_factor=1.5)
        cloned = clone(est)
        assert cloned.get_params() == est.get_params()

    def test_rejects_asymmetric(self):
        bad = np.array([[0.0, 1.0], [0.0, 0.0]])
        with pytest.raises(GraphError, match="symmetric"):
            SingleClusterPursuit(cluster_size=2).fit(bad)

    def test_rejects_dropped_seed(self):
        adjacency = np.zeros((4, 4))
        adjacency[1, 2] = adjacency[2, 1] = 1.0
        adjacency[2, 3] = adjacency[3, 2] = 1.0
        est = SingleClusterPursuit(cluster_size=2, seed_vertex=0,
                                   drop_isolated=True)
        with pytest.raises(GraphError, match="dropped"):
            est.fit(adjacency)


class TestIteratedClusterPursuit:
    def test_partition_matches_truth(self, two_k3_adjacency):
        est = IteratedClusterPursuit(cluster_sizes=[3, 3])
        labels = est.fit_predict(two_k3_adjacency)
        truth = Partition(np.array([0, 0, 0, 1, 1, 1]), 2)
        accuracy, _ = partition_accuracy(Partition(labels, est.n_clusters_),
                                         truth)
        assert accuracy == 1.0

    def test_scalar_size(self, two_k3_adjacency):
        est = IteratedClusterPursuit(cluster_sizes=3).fit(two_k3_adjacency)
        assert est.n_clusters_ == 2


class TestSpectralClusteringBaseline:
    def test_recovers_components(self, two_k3_adjacency):
        est = SpectralClusteringBaseline(n_clusters=2, random_state=0)
        labels = est.fit_predict(two_k3_adjacency)
        assert labels[0] == labels[1] == labels[2]
        assert labels[3] == labels[4] == labels[5]
        assert labels[0] != labels[3]

    def test_deterministic(self, two_k3_adjacency):
        a = SpectralClusteringBaseline(n_clusters=2, random_state=1)
        b = SpectralClusteringBaseline(n_clusters=2, random_state=1)
        npt.assert_array_equal(a.fit_predict(two_k3_adjacency),
                               b.fit_predict(two_k3_adjacency))


class TestCoClusterPursuit:
    def test_two_blocks(self):
        matrix = np.kron(np.eye(2), np.ones((3, 2)))
        est = CoClusterPursuit(n_clusters=2, row_cluster_size=3).fit(matrix)
        npt.assert_array_equal(est.row_labels_, [0, 0, 0, 1, 1, 1])
        npt.assert_array_equal(est.column_labels_, [0, 0, 1, 1])
