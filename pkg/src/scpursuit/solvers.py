"""Greedy sparse recovery (OMP, subspace pursuit) over column-accessible operators."""

from __future__ import annotations

import abc
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.linalg import solve_triangular
from scipy.sparse.linalg import LinearOperator, lsqr as _scipy_lsqr

DEFAULT_LSQR_TOL = 1e-10


class SolverError(ValueError):
    """Invalid solver input."""


class ColumnOperator(abc.ABC):
    """A linear map read only through columns and column subsets.

    The solvers never touch anything beyond ``column``, ``apply`` (matvec
    over all columns), ``correlate`` (transpose-matvec) and ``restrict``;
    this keeps implicit operators such as the graph Laplacian usable
    without ever materializing them.
    """

    shape: tuple[int, int]

    @abc.abstractmethod
    def column(self, j: int) -> np.ndarray:
        """Column j as a dense vector."""

    @abc.abstractmethod
    def apply(self, x) -> np.ndarray:
        """``Phi @ x`` for a dense coefficient vector over all columns."""

    @abc.abstractmethod
    def correlate(self, r) -> np.ndarray:
        """``Phi^T @ r``: inner products of every column with r."""

    @abc.abstractmethod
    def restrict(self, cols) -> "ColumnOperator":
        """Operator over the column subset ``cols`` (local 0..len-1 indexing)."""

    def lsq_operator(self):
        """Object acceptable to scipy's lsqr for this operator."""
        return LinearOperator(self.shape, matvec=self.apply, rmatvec=self.correlate,
                              dtype=np.float64)

    def dense(self) -> np.ndarray:
        """Materialize all columns (diagnostics only; desk scale)."""
        return np.column_stack([self.column(j) for j in range(self.shape[1])])


class MatrixOperator(ColumnOperator):
    """Column operator backed by a concrete dense or scipy-sparse matrix."""

    def __init__(self, matrix):
        if sp.issparse(matrix):
            self.matrix = sp.csc_array(matrix)
        else:
            self.matrix = np.asarray(matrix, dtype=np.float64)
            if self.matrix.ndim != 2:
                raise SolverError("operator matrix must be two-dimensional")
        self.shape = tuple(self.matrix.shape)

    def column(self, j):
        col = self.matrix[:, [j]]
        if sp.issparse(col):
            return col.toarray().ravel()
        return np.array(col).ravel()

    def apply(self, x):
        return self.matrix @ np.asarray(x, dtype=np.float64)

    def correlate(self, r):
        return self.matrix.T @ np.asarray(r, dtype=np.float64)

    def restrict(self, cols):
        cols = np.asarray(cols, dtype=np.int64)
        return MatrixOperator(self.matrix[:, cols])

    def lsq_operator(self):
        return self.matrix

    def dense(self):
        if sp.issparse(self.matrix):
            return self.matrix.toarray()
        return np.array(self.matrix)


class RestrictedOperator(ColumnOperator):
    """Generic column-subset view over any ColumnOperator.

    Used for implicit operators whose column slices cannot be materialized
    cheaply; concrete matrices override ``restrict`` instead.
    """

    def __init__(self, base: ColumnOperator, cols):
        self.base = base
        self.cols = np.asarray(cols, dtype=np.int64)
        self.shape = (base.shape[0], self.cols.size)

    def column(self, j):
        return self.base.column(int(self.cols[j]))

    def apply(self, x):
        x = np.asarray(x, dtype=np.float64)
        full = np.zeros(self.base.shape[1])
        full[self.cols] = x
        return self.base.apply(full)

    def correlate(self, r):
        return self.base.correlate(r)[self.cols]

    def restrict(self, cols):
        cols = np.asarray(cols, dtype=np.int64)
        return RestrictedOperator(self.base, self.cols[cols])


@dataclass
class RecoveryProblem:
    """A sparse-recovery instance: minimize ||Phi x - y|| with ||x||_0 <= s."""

    operator: ColumnOperator
    target: np.ndarray
    sparsity: int

    def __post_init__(self):
        self.target = np.asarray(self.target, dtype=np.float64).ravel()
        if self.target.size != self.operator.shape[0]:
            raise SolverError(
                f"target has length {self.target.size}, operator has "
                f"{self.operator.shape[0]} rows"
            )
        if not np.all(np.isfinite(self.target)):
            raise SolverError("target contains non-finite entries")
        if not 0 <= self.sparsity <= self.operator.shape[1]:
            raise SolverError(
                f"sparsity budget {self.sparsity} outside [0, {self.operator.shape[1]}]"
            )


@dataclass
class RecoveryResult:
    """Output of a pursuit solver.

    ``support`` holds sorted local column indices, ``coefficients`` is
    aligned with it. ``converged`` is False only for abnormal stops
    (stagnation, inner least-squares failure).
    """

    support: np.ndarray
    coefficients: np.ndarray
    residual_norm: float
    iterations: int
    converged: bool
    stop_reason: str


@dataclass
class LeastSquaresFit:
    coefficients: np.ndarray
    converged: bool
    iterations: int
    istop: int


def select_largest(v, s: int) -> np.ndarray:
    """Indices of the s largest-magnitude entries of v, sorted ascending.

    Ties are broken toward the smaller index; s beyond len(v) returns all
    indices, s = 0 returns the empty set.
    """
    v = np.asarray(v, dtype=np.float64).ravel()
    if s < 0:
        raise SolverError("s must be nonnegative")
    take = min(int(s), v.size)
    if take == 0:
        return np.zeros(0, dtype=np.int64)
    order = np.argsort(-np.abs(v), kind="stable")
    return np.sort(order[:take]).astype(np.int64)


def hard_threshold(v, s: int) -> np.ndarray:
    """Keep the s largest-magnitude entries of v, zero the rest."""
    v = np.asarray(v, dtype=np.float64).ravel()
    out = np.zeros_like(v)
    keep = select_largest(v, s)
    out[keep] = v[keep]
    return out


def _lsqr_on(operator: ColumnOperator, y, tol, max_iter, x0=None) -> LeastSquaresFit:
    a = operator.lsq_operator()
    x, istop, itn = _scipy_lsqr(a, y, atol=tol, btol=tol, iter_lim=max_iter,
                                x0=x0)[:3]
    # istop 0: x0 already solves; 1/2: atol/btol satisfied (consistent /
    # least-squares); anything else means the tolerance was not certified.
    return LeastSquaresFit(coefficients=x, converged=istop in (0, 1, 2),
                           iterations=int(itn), istop=int(istop))


def lsqr_solve(operator: ColumnOperator, cols, y, tol: float = DEFAULT_LSQR_TOL,
               max_iter: Optional[int] = None, x0=None) -> LeastSquaresFit:
    """Iterative least squares ``min_x ||Phi_cols x - y||_2``.

    Runs LSQR on the column submatrix; stops when the relative residual of
    the normal equations falls below ``tol`` or after ``max_iter``
    iterations (default 4 * |cols|), in which case the fit is flagged as
    not converged.
    """
    cols = np.asarray(cols, dtype=np.int64).ravel()
    if cols.size < 1:
        raise SolverError("lsqr_solve needs at least one column")
    y = np.asarray(y, dtype=np.float64).ravel()
    if not np.all(np.isfinite(y)):
        raise SolverError("right-hand side contains non-finite entries")
    if x0 is not None and not np.all(np.isfinite(x0)):
        raise SolverError("warm start contains non-finite entries")
    if max_iter is None:
        max_iter = 4 * cols.size
    return _lsqr_on(operator.restrict(cols), y, tol, max_iter, x0=x0)


class _IncrementalLeastSquares:
    """Exact least squares over a growing column set.

    Maintains the selected columns densely together with a Cholesky factor
    of their Gram matrix, appending one column per OMP iteration (the usual
    fast OMP formulation). ``append`` refuses near-collinear columns, in
    which case the caller falls back to the iterative solver.
    """

    def __init__(self, n_rows, y):
        self.n_rows = n_rows
        self.y = y
        self.columns = np.empty((n_rows, 8))
        self.chol = np.zeros((8, 8))
        self.rhs = np.empty(8)
        self.size = 0

    def _grow(self):
        cap = self.columns.shape[1] * 2
        self.columns = np.concatenate(
            [self.columns, np.empty((self.n_rows, cap // 2))], axis=1)
        chol = np.zeros((cap, cap))
        chol[:self.size, :self.size] = self.chol[:self.size, :self.size]
        self.chol = chol
        self.rhs = np.concatenate([self.rhs, np.empty(cap // 2)])

    def append(self, column) -> bool:
        s = self.size
        if s == self.columns.shape[1]:
            self._grow()
        diag = float(column @ column)
        if s == 0:
            if diag <= 0.0:
                return False
            pivot2 = diag
            w = np.zeros(0)
        else:
            g = self.columns[:, :s].T @ column
            w = solve_triangular(self.chol[:s, :s], g, lower=True)
            pivot2 = diag - float(w @ w)
            if pivot2 <= diag * 1e-12:
                return False
        self.columns[:, s] = column
        self.chol[s, :s] = w
        self.chol[s, s] = np.sqrt(pivot2)
        self.rhs[s] = column @ self.y
        self.size = s + 1
        return True

    def solve(self):
        s = self.size
        half = solve_triangular(self.chol[:s, :s], self.rhs[:s], lower=True)
        x = solve_triangular(self.chol[:s, :s], half, lower=True, trans="T")
        residual = self.y - self.columns[:, :s] @ x
        return x, residual

    def support_correlation(self, residual):
        if self.size == 0:
            return 0.0
        return float(np.max(np.abs(self.columns[:, :self.size].T @ residual)))


def omp(problem: RecoveryProblem, *, max_support: Optional[int] = None,
        residual_tol: float = 0.0, lsqr_tol: float = DEFAULT_LSQR_TOL,
        lsqr_max_iter: Optional[int] = None, trace: Optional[list] = None
        ) -> RecoveryResult:
    """Orthogonal matching pursuit.

    Each iteration appends the single column best correlated with the
    residual (raw inner products, no normalization), re-solves least
    squares on the whole support, and updates the residual. The
    least-squares refit uses an exact incremental Cholesky update and falls
    back to the iterative solver if the support turns near-collinear.

    Stops when the support reaches ``max_support`` (default: the problem's
    sparsity budget) or the residual norm drops below ``residual_tol``.
    Selecting a column already in the support is a stagnation stop,
    flagged via ``converged=False``.
    """
    op, y = problem.operator, problem.target
    n_cols = op.shape[1]
    budget = problem.sparsity if max_support is None else min(max_support, n_cols)
    support: list[int] = []
    chosen: set[int] = set()
    incremental = _IncrementalLeastSquares(op.shape[0], y)
    use_direct = True
    r = y.copy()
    coeffs = np.zeros(0)
    iterations = 0
    converged, reason = True, "max_support"
    lsq_ok = True
    while True:
        rnorm = float(np.linalg.norm(r))
        if rnorm == 0.0:
            reason = "residual_zero"
            break
        if residual_tol > 0 and rnorm < residual_tol:
            reason = "residual_tol"
            break
        if len(support) >= budget:
            reason = "max_support"
            break
        scores = np.abs(op.correlate(r))
        j = int(np.argmax(scores))  # first maximum: smallest-index tie-break
        if j in chosen:
            converged, reason = False, "stagnation"
            break
        iterations += 1
        support.append(j)
        chosen.add(j)
        if use_direct:
            use_direct = incremental.append(op.column(j))
        if use_direct:
            coeffs, r = incremental.solve()
        else:
            cols = np.asarray(support, dtype=np.int64)
            x0 = np.concatenate([coeffs, [0.0]]) if coeffs.size + 1 == cols.size \
                else None
            sub = op.restrict(cols)
            fit = _lsqr_on(sub, y, lsqr_tol,
                           lsqr_max_iter if lsqr_max_iter is not None
                           else 4 * cols.size, x0=x0)
            lsq_ok = lsq_ok and fit.converged
            coeffs = fit.coefficients
            r = y - sub.apply(coeffs)
        if trace is not None:
            cols = np.asarray(support, dtype=np.int64)
            if use_direct:
                corr = incremental.support_correlation(r)
            else:
                corr = float(np.max(np.abs(op.restrict(cols).correlate(r))))
            trace.append({
                "iteration": iterations,
                "support": np.sort(cols),
                "residual_norm": float(np.linalg.norm(r)),
                "support_correlation": corr,
            })
    if not lsq_ok and converged:
        converged, reason = False, "lsq_not_converged"
    support_arr = np.asarray(support, dtype=np.int64)
    order = np.argsort(support_arr)
    return RecoveryResult(
        support=support_arr[order],
        coefficients=np.asarray(coeffs, dtype=np.float64)[order],
        residual_norm=float(np.linalg.norm(r)),
        iterations=iterations,
        converged=converged,
        stop_reason=reason,
    )


def default_sp_iterations(n_cols: int) -> int:
    """Default subspace-pursuit iteration cap: max(10, ceil(log2 N))."""
    return max(10, math.ceil(math.log2(max(n_cols, 2))))


def subspace_pursuit(problem: RecoveryProblem, k_max: Optional[int] = None,
                     tol: float = 1e-10, *, lsqr_tol: float = DEFAULT_LSQR_TOL,
                     lsqr_max_iter: Optional[int] = None) -> RecoveryResult:
    """Subspace pursuit with an s-sized candidate support.

    Initialization takes the s best-correlated columns; each iteration
    expands the support with the s columns best correlated with the
    residual, solves least squares on the union (at most 2s columns),
    prunes back to s by hard thresholding, and recomputes the residual.
    Stops after ``k_max`` iterations, when the residual norm drops below
    ``tol``, or as soon as the residual fails to decrease (the previous
    iterate is returned in that case).

    A sparsity budget of zero is legal and returns the empty solution.
    """
    op, y, s = problem.operator, problem.target, problem.sparsity
    n_cols = op.shape[1]
    s = min(s, n_cols)
    if s == 0:
        return RecoveryResult(
            support=np.zeros(0, dtype=np.int64),
            coefficients=np.zeros(0),
            residual_norm=float(np.linalg.norm(y)),
            iterations=0,
            converged=True,
            stop_reason="empty_budget",
        )
    if k_max is None:
        k_max = default_sp_iterations(n_cols)
    lsq_iter = lsqr_max_iter if lsqr_max_iter is not None else 8 * s

    def solve(cols, x0=None):
        sub = op.restrict(cols)
        fit = _lsqr_on(sub, y, lsqr_tol, lsq_iter, x0=x0)
        resid = y - sub.apply(fit.coefficients)
        return fit, resid

    support = select_largest(op.correlate(y), s)
    fit, r = solve(support)
    coeffs = fit.coefficients
    lsq_ok = fit.converged
    rnorm = float(np.linalg.norm(r))
    iterations = 0
    reason = "k_max"
    for _ in range(k_max):
        if rnorm < tol:
            reason = "residual_tol"
            break
        candidates = select_largest(op.correlate(r), s)
        expanded = np.union1d(support, candidates)
        x0 = np.zeros(expanded.size)
        x0[np.searchsorted(expanded, support)] = coeffs
        fit, _ = solve(expanded, x0=x0)
        keep = select_largest(fit.coefficients, s)
        new_support = expanded[keep]
        new_coeffs = fit.coefficients[keep]
        sub = op.restrict(new_support)
        new_r = y - sub.apply(new_coeffs)
        new_rnorm = float(np.linalg.norm(new_r))
        iterations += 1
        if new_rnorm >= rnorm:
            reason = "residual_stall"
            break
        support, coeffs, r, rnorm = new_support, new_coeffs, new_r, new_rnorm
        lsq_ok = lsq_ok and fit.converged
    else:
        reason = "k_max"
    if rnorm < tol:
        reason = "residual_tol"
    return RecoveryResult(
        support=support,
        coefficients=np.asarray(coeffs, dtype=np.float64),
        residual_norm=rnorm,
        iterations=iterations,
        converged=lsq_ok,
        stop_reason=reason,
    )
