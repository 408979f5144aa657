import math

import numpy as np
import numpy.testing as npt
import pytest

from scpursuit import (LaplacianView, Partition, ScpConfig, build_graph,
                       degree_threshold, degree_threshold_iterated,
                       gaussian_affinity, knn_sparsify, misclassification,
                       partition_accuracy, scp)
from scpursuit.pipeline import PipelineError


class TestGaussianAffinity:
    def test_identical_points(self):
        aff = gaussian_affinity(np.zeros((2, 3)), sigma=2.0)
        assert aff[0, 1] == 1.0
        assert aff[0, 0] == 0.0

    def test_unit_distance(self):
        aff = gaussian_affinity(np.array([[0.0], [1.0]]), sigma=1.0)
        assert aff[0, 1] == pytest.approx(math.exp(-1.0), rel=1e-12)

    def test_gene_expression_shape(self):
        # the 2436 x 13 shape used in preprocessing, sigma = sqrt(10)
        rng = np.random.default_rng(0)
        points = rng.uniform(4.0, 13.0, size=(2436, 13))
        aff = gaussian_affinity(points, sigma=math.sqrt(10.0))
        assert np.all(np.isfinite(aff))
        npt.assert_array_equal(aff, aff.T)
        assert np.all(np.diag(aff) == 0.0)
        assert aff.max() <= 1.0

    def test_translation_invariance(self):
        rng = np.random.default_rng(1)
        points = rng.standard_normal((40, 3))
        shifted = points + np.array([5.0, -2.0, 11.0])
        a = gaussian_affinity(points, sigma=1.5)
        b = gaussian_affinity(shifted, sigma=1.5)
        assert np.max(np.abs(a - b)) <= 1e-12

    def test_rejects_bad_sigma(self):
        with pytest.raises(PipelineError, match="sigma"):
            gaussian_affinity(np.zeros((3, 1)), sigma=0.0)

    def test_rejects_nonfinite_points(self):
        with pytest.raises(PipelineError, match="non-finite"):
            gaussian_affinity(np.array([[0.0], [np.inf]]), sigma=1.0)


class TestKnnSparsify:
    def test_three_points_one_neighbor(self):
        points = np.array([[0.0], [1.0], [10.0]])
        aff = gaussian_affinity(points, sigma=1.0)
        graph = knn_sparsify(aff, 1)
        us, vs, ws = graph.edge_arrays()
        assert list(zip(us.tolist(), vs.tolist())) == [(0, 1), (1, 2)]
        npt.assert_allclose(ws, [math.exp(-1.0), math.exp(-81.0)], rtol=1e-12)

    def test_full_neighborhood_is_complete(self):
        rng = np.random.default_rng(2)
        aff = gaussian_affinity(rng.standard_normal((8, 2)), sigma=1.0)
        graph = knn_sparsify(aff, 7)
        assert graph.edge_count == 28

    def test_min_degree_invariant(self):
        rng = np.random.default_rng(3)
        aff = gaussian_affinity(rng.standard_normal((40, 2)), sigma=1.0)
        for k in (1, 3, 10):
            graph = knn_sparsify(aff, k)
            assert graph.degree_counts().min() >= min(k, 39)
            a = graph.to_scipy()
            assert (a - a.T).nnz == 0

    def test_scp_recovers_planted_blob(self):
        rng = np.random.default_rng(4)
        blob_a = rng.normal(0.0, 0.5, size=(30, 2))
        blob_b = rng.normal(0.0, 0.5, size=(30, 2)) + 20.0
        points = np.vstack([blob_a, blob_b])
        aff = gaussian_affinity(points, sigma=2.0)
        graph = knn_sparsify(aff, 5)
        result = scp(LaplacianView(graph), ScpConfig(seed_vertex=0, n0_hat=30))
        npt.assert_array_equal(result.cluster, np.arange(30))

    def test_rejects_bad_k(self):
        aff = np.ones((4, 4))
        with pytest.raises(PipelineError, match="k must"):
            knn_sparsify(aff, 0)
        with pytest.raises(PipelineError, match="k must"):
            knn_sparsify(aff, 4)


class TestDegreeThreshold:
    def test_path_keeps_middle(self, path3):
        result = degree_threshold(path3, 2.0)
        npt.assert_array_equal(result.kept, [1])
        assert result.graph.n == 1

    def test_zero_threshold_is_identity(self, k3):
        result = degree_threshold(k3, 0.0)
        assert result.graph is k3
        assert not result.second_pass_would_drop

    def test_all_dropped_rejected(self, path3):
        with pytest.raises(PipelineError, match="every vertex"):
            degree_threshold(path3, 10.0)

    def test_reports_second_pass(self):
        # removing the endpoints of a 4-path drags the middle below 2
        path4 = build_graph(4, [(0, 1), (1, 2), (2, 3)])
        result = degree_threshold(path4, 2.0)
        npt.assert_array_equal(result.kept, [1, 2])
        assert result.second_pass_would_drop

    def test_iterated_runs_to_fixpoint(self):
        star_plus = build_graph(
            5, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3), (0, 4)])
        result = degree_threshold_iterated(star_plus, 3.0)
        npt.assert_array_equal(result.kept, [0, 1, 2, 3])
        assert not result.second_pass_would_drop


class TestMisclassification:
    def test_exact_recovery(self):
        assert misclassification([0, 1, 2], [0, 1, 2]) == 0.0

    def test_one_stray_of_four(self):
        assert misclassification([0, 1, 2, 3], [0, 1, 2]) == 0.25

    def test_disjoint(self):
        assert misclassification([5, 6], [0, 1]) == 1.0

    def test_empty_rejected(self):
        with pytest.raises(PipelineError, match="empty"):
            misclassification([], [0])


class TestPartitionAccuracy:
    def test_identical(self):
        part = Partition(np.array([0, 0, 1, 1]), 2)
        accuracy, confusion = partition_accuracy(part, part)
        assert accuracy == 1.0
        npt.assert_array_equal(confusion, [[2, 0], [0, 2]])

    def test_label_swap_invariance(self):
        a = Partition(np.array([0, 0, 1, 1]), 2)
        b = Partition(np.array([1, 1, 0, 0]), 2)
        accuracy, _ = partition_accuracy(a, b)
        assert accuracy == 1.0

    def test_one_moved_vertex(self):
        truth = Partition(np.repeat([0, 1], 50), 2)
        moved = truth.assignment.copy()
        moved[0] = 1
        accuracy, _ = partition_accuracy(Partition(moved, 2), truth)
        assert accuracy == pytest.approx(0.99)

    def test_cluster_count_mismatch_padded(self):
        a = Partition(np.array([0, 1, 2, 2]), 3)
        b = Partition(np.array([0, 1, 1, 1]), 2)
        accuracy, confusion = partition_accuracy(a, b)
        assert accuracy == pytest.approx(0.75)
        assert confusion.shape == (3, 2)
