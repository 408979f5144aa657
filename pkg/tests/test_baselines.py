import math

import numpy as np
import numpy.testing as npt
import pytest

from scpursuit import (GraphError, KMeansConfig, Partition, SbmParams,
                       gen_sbm, kmeans, partition_accuracy,
                       spectral_clustering)


class TestKMeans:
    def test_well_separated_1d(self):
        points = np.array([0.0, 0.1, 10.0, 10.1])
        labels, _ = kmeans(points, KMeansConfig(k=2, seed=0))
        assert labels[0] == labels[1]
        assert labels[2] == labels[3]
        assert labels[0] != labels[2]

    def test_k_equals_n(self):
        points = np.array([[0.0], [1.0], [2.0]])
        labels, centroids = kmeans(points, KMeansConfig(k=3, seed=1))
        assert np.unique(labels).size == 3
        wcss = sum(np.sum((points[labels == c] - centroids[c]) ** 2)
                   for c in range(3))
        assert wcss == pytest.approx(0.0, abs=1e-15)

    def test_planted_blobs_always_split(self):
        rng = np.random.default_rng(12)
        blob_a = rng.normal(0.0, 1.0, size=(20, 2))
        blob_b = rng.normal(0.0, 1.0, size=(20, 2)) + 10.0
        points = np.vstack([blob_a, blob_b])
        for seed in range(100):
            labels, _ = kmeans(points, KMeansConfig(k=2, seed=seed,
                                                    restarts=1))
            assert np.unique(labels[:20]).size == 1
            assert np.unique(labels[20:]).size == 1
            assert labels[0] != labels[-1]

    def test_wcss_nonincreasing(self):
        rng = np.random.default_rng(3)
        points = rng.standard_normal((60, 3))
        history = []
        kmeans(points, KMeansConfig(k=4, seed=5, restarts=1),
               wcss_history=history)
        (trajectory,) = history
        for prev, cur in zip(trajectory, trajectory[1:]):
            assert cur <= prev + 1e-12

    def test_duplicate_points_do_not_crash(self):
        points = np.array([[0.0], [0.0], [0.0], [0.0], [5.0]])
        labels, _ = kmeans(points, KMeansConfig(k=3, seed=2))
        assert labels.size == 5

    def test_needs_enough_points(self):
        with pytest.raises(GraphError, match="at least"):
            kmeans(np.zeros((2, 1)), KMeansConfig(k=3))


class TestSpectralClustering:
    def test_two_triangles(self, two_k3s):
        part = spectral_clustering(two_k3s, 2, seed=0)
        truth = Partition(np.array([0, 0, 0, 1, 1, 1]), 2)
        accuracy, _ = partition_accuracy(part, truth)
        assert accuracy == 1.0

    def test_single_cluster(self):
        from scpursuit import build_graph
        k4 = build_graph(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)])
        part = spectral_clustering(k4, 1, seed=0)
        assert part.k == 1

    def test_deterministic(self, two_k3s):
        a = spectral_clustering(two_k3s, 2, seed=3)
        b = spectral_clustering(two_k3s, 2, seed=3)
        npt.assert_array_equal(a.assignment, b.assignment)

    def test_rejects_isolated(self):
        from scpursuit import build_graph
        graph = build_graph(3, [(0, 1)])
        with pytest.raises(GraphError, match="degrees"):
            spectral_clustering(graph, 2)

    def test_recovers_sbm_exactly(self):
        # the log-form regime where SC is reported exact
        n = 1000
        params = SbmParams(n=n, k=5, p=2 * math.log(n) / math.sqrt(n),
                           q=2 * math.log(n) / n)
        sample = gen_sbm(params, seed=9)
        part = spectral_clustering(sample.graph, 5, seed=0)
        accuracy, _ = partition_accuracy(part, sample.partition)
        assert accuracy == 1.0
