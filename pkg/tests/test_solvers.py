import numpy as np
import numpy.testing as npt
import pytest

from scpursuit import (LaplacianView, MatrixOperator, RecoveryProblem,
                       SolverError, hard_threshold, lsqr_solve, omp,
                       select_largest, subspace_pursuit)
from scpursuit.diagnostics import erc_check


class TestSelectLargest:
    def test_magnitude_order(self):
        npt.assert_array_equal(select_largest([3.0, -5.0, 1.0], 2), [0, 1])

    def test_tie_prefers_smaller_index(self):
        npt.assert_array_equal(select_largest([2.0, 2.0, 1.0], 1), [0])

    def test_clamps_to_length(self):
        npt.assert_array_equal(select_largest([0.0, 0.0], 5), [0, 1])

    def test_zero_budget(self):
        assert select_largest([1.0, 2.0], 0).size == 0

    def test_negative_budget_rejected(self):
        with pytest.raises(SolverError):
            select_largest([1.0], -1)


class TestHardThreshold:
    def test_keeps_largest(self):
        npt.assert_array_equal(hard_threshold([3.0, -5.0, 1.0], 2),
                               [3.0, -5.0, 0.0])

    def test_zero_budget(self):
        npt.assert_array_equal(hard_threshold([3.0, 1.0], 0), [0.0, 0.0])

    def test_idempotent_on_sparse_vector(self):
        v = np.array([0.0, 4.0, 0.0, -2.0])
        npt.assert_array_equal(hard_threshold(v, 2), v)


class TestLsqrSolve:
    def test_decoupled_columns(self):
        op = MatrixOperator(np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]))
        fit = lsqr_solve(op, [0, 1], [2.0, 3.0, 0.0])
        npt.assert_allclose(fit.coefficients, [2.0, 3.0], atol=1e-12)
        assert fit.converged

    def test_orthonormal_closed_form(self):
        rng = np.random.default_rng(0)
        q, _ = np.linalg.qr(rng.standard_normal((12, 5)))
        y = rng.standard_normal(12)
        fit = lsqr_solve(MatrixOperator(q), np.arange(5), y)
        npt.assert_allclose(fit.coefficients, q.T @ y, atol=1e-10)

    def test_matches_normal_equation_oracle(self):
        rng = np.random.default_rng(42)
        for _ in range(25):
            a = rng.standard_normal((20, 5))
            y = rng.standard_normal(20)
            fit = lsqr_solve(MatrixOperator(a), np.arange(5), y, tol=1e-12)
            oracle = np.linalg.solve(a.T @ a, a.T @ y)
            npt.assert_allclose(fit.coefficients, oracle, rtol=1e-8,
                                atol=1e-10)

    def test_rejects_empty_columns(self):
        op = MatrixOperator(np.eye(3))
        with pytest.raises(SolverError, match="at least one column"):
            lsqr_solve(op, [], np.ones(3))

    def test_rejects_nonfinite(self):
        op = MatrixOperator(np.eye(3))
        with pytest.raises(SolverError, match="non-finite"):
            lsqr_solve(op, [0], np.array([np.nan, 0.0, 0.0]))

    def test_iteration_cap_reported(self):
        rng = np.random.default_rng(3)
        a = rng.standard_normal((30, 8))
        fit = lsqr_solve(MatrixOperator(a), np.arange(8),
                         rng.standard_normal(30), tol=1e-15, max_iter=1)
        assert not fit.converged


def residual_of(op, result, y):
    if result.support.size == 0:
        return np.linalg.norm(y)
    sub = op.restrict(result.support)
    return np.linalg.norm(y - sub.apply(result.coefficients))


class TestOmp:
    def test_identity_single_pick(self):
        problem = RecoveryProblem(MatrixOperator(np.eye(3)),
                                  np.array([0.0, 1.0, 0.0]), 3)
        result = omp(problem, residual_tol=1e-10)
        npt.assert_array_equal(result.support, [1])
        npt.assert_allclose(result.coefficients, [1.0], atol=1e-12)
        assert result.residual_norm <= 1e-10
        assert result.iterations == 1

    def test_two_disjoint_edges(self, two_edges):
        lap = LaplacianView(two_edges)
        op = MatrixOperator(lap.csc())
        others = np.array([1, 2, 3])
        phi = op.restrict(others)
        y = -lap.column_dense(0)
        result = omp(RecoveryProblem(phi, y, 3), residual_tol=1e-8)
        npt.assert_array_equal(others[result.support], [1])
        npt.assert_allclose(result.coefficients, [1.0], atol=1e-10)
        assert result.iterations == 1

    def test_two_triangles_recovers_component(self, two_k3s):
        lap = LaplacianView(two_k3s)
        op = MatrixOperator(lap.csc())
        others = np.arange(1, 6)
        result = omp(RecoveryProblem(op.restrict(others),
                                     -lap.column_dense(0), 5),
                     residual_tol=1e-8)
        npt.assert_array_equal(others[result.support], [1, 2])
        npt.assert_allclose(result.coefficients, [1.0, 1.0], atol=1e-8)
        assert result.residual_norm <= 1e-8

    def test_stagnation_flagged(self):
        op = MatrixOperator(np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]))
        result = omp(RecoveryProblem(op, np.array([0.0, 0.0, 1.0]), 2),
                     residual_tol=1e-12)
        assert not result.converged
        assert result.stop_reason == "stagnation"

    def test_residual_norm_consistent(self):
        rng = np.random.default_rng(5)
        a = rng.standard_normal((20, 30))
        y = rng.standard_normal(20)
        result = omp(RecoveryProblem(MatrixOperator(a), y, 6))
        assert result.residual_norm == pytest.approx(
            residual_of(MatrixOperator(a), result, y), rel=1e-10)

    def test_orthogonality_and_decrease(self):
        rng = np.random.default_rng(17)
        for _ in range(10):
            a = rng.standard_normal((25, 40))
            col_norms = np.linalg.norm(a, axis=0)
            y = rng.standard_normal(25)
            trace = []
            omp(RecoveryProblem(MatrixOperator(a), y, 10), trace=trace)
            norms = [step["residual_norm"] for step in trace]
            for prev, cur in zip(norms, norms[1:]):
                assert cur <= prev + 1e-12
            for step in trace:
                if step["residual_norm"] < 1e-12 * np.linalg.norm(y):
                    continue
                bound = 1e-8 * step["residual_norm"] * col_norms.max()
                assert step["support_correlation"] <= bound


class TestSubspacePursuit:
    def test_orthonormal_exact(self):
        rng = np.random.default_rng(1)
        q, _ = np.linalg.qr(rng.standard_normal((30, 10)))
        x_true = np.zeros(10)
        x_true[[2, 5, 7]] = [1.0, -2.0, 0.5]
        y = q @ x_true
        result = subspace_pursuit(RecoveryProblem(MatrixOperator(q), y, 3))
        npt.assert_array_equal(result.support, [2, 5, 7])
        assert result.residual_norm <= 1e-10
        assert result.iterations == 0  # initialization already exact

    def test_two_triangle_scp_subproblem(self, two_k3s):
        lap = LaplacianView(two_k3s)
        op = MatrixOperator(lap.csc())
        omega = np.array([1, 2, 3])
        y = lap.column_dense(3)
        result = subspace_pursuit(RecoveryProblem(op.restrict(omega), y, 1))
        npt.assert_array_equal(result.support, [2])  # local index of vertex 3
        assert result.residual_norm <= 1e-10

    def test_planted_recovery_rate(self):
        rng = np.random.default_rng(2024)
        hits = 0
        trials = 20
        for _ in range(trials):
            a = rng.standard_normal((50, 100))
            a /= np.linalg.norm(a, axis=0)
            support = np.sort(rng.choice(100, size=4, replace=False))
            x = np.zeros(100)
            x[support] = rng.standard_normal(4)
            result = subspace_pursuit(
                RecoveryProblem(MatrixOperator(a), a @ x, 4))
            hits += int(np.array_equal(result.support, support))
        assert hits >= int(0.9 * trials)

    def test_support_size_is_min_s_n(self):
        rng = np.random.default_rng(7)
        a = rng.standard_normal((12, 6))
        y = rng.standard_normal(12)
        for s in (1, 3, 6, 9):
            result = subspace_pursuit(RecoveryProblem(MatrixOperator(a), y,
                                                      min(s, 6)))
            assert result.support.size == min(s, 6)
        big = subspace_pursuit(RecoveryProblem(MatrixOperator(a), y, 6))
        assert big.support.size == 6

    def test_zero_budget_is_legal(self):
        op = MatrixOperator(np.eye(3))
        result = subspace_pursuit(RecoveryProblem(op, np.ones(3), 0))
        assert result.support.size == 0
        assert result.converged
        assert result.residual_norm == pytest.approx(np.sqrt(3.0))

    def test_residual_norm_consistent(self):
        rng = np.random.default_rng(8)
        a = rng.standard_normal((18, 40))
        y = rng.standard_normal(18)
        result = subspace_pursuit(RecoveryProblem(MatrixOperator(a), y, 5))
        assert result.residual_norm == pytest.approx(
            residual_of(MatrixOperator(a), result, y), rel=1e-10)


class TestExactRecoveryCondition:
    def test_erc_implies_omp_recovery(self):
        # whenever ||Phi_S^+ Phi_Sc||_{1->1} < 1 and Phi_S is injective,
        # OMP recovers any vector supported on S
        rng = np.random.default_rng(99)
        checked = 0
        for _ in range(30):
            a = rng.standard_normal((20, 24))
            a /= np.linalg.norm(a, axis=0)
            support = np.sort(rng.choice(24, size=2, replace=False))
            report = erc_check(MatrixOperator(a), support)
            if not report.passes:
                continue
            checked += 1
            x = np.zeros(24)
            x[support] = rng.standard_normal(2) + np.sign(
                rng.standard_normal(2))
            result = omp(RecoveryProblem(MatrixOperator(a), a @ x, 2),
                         residual_tol=1e-10)
            npt.assert_array_equal(result.support, support)
            npt.assert_allclose(result.coefficients, x[support], atol=1e-8)
        assert checked >= 10


class TestInnerSolveFlagPropagation:
    def test_sp_flags_lsq_nonconvergence(self):
        rng = np.random.default_rng(13)
        a = rng.standard_normal((30, 12))
        y = rng.standard_normal(30)
        result = subspace_pursuit(RecoveryProblem(MatrixOperator(a), y, 4),
                                  lsqr_tol=1e-15, lsqr_max_iter=1)
        assert not result.converged
