"""Single cluster pursuit: one community at a time by thresholded sparse recovery.

The two-stage method: correlations with the seed's Laplacian column select a
superset Omega of the target cluster, then subspace pursuit solves for the
indicator of the spurious part Lambda = Omega minus the cluster, which is
much sparser than the cluster itself. The recovered cluster is
``{seed} | (Omega \\ Lambda)``. Iterating with removal partitions the whole
graph; the same core runs against an implicit bipartite operator for
co-clustering rectangular matrices.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
import scipy.sparse as sp

from .generators import Partition
from .graph import GraphError, LaplacianView, induced_subgraph
from .solvers import (ColumnOperator, MatrixOperator, RecoveryProblem,
                      RecoveryResult, RestrictedOperator, omp, select_largest,
                      subspace_pursuit)

OMEGA_FACTOR_DEFAULT = 10.0 / 9.0


class PursuitError(RuntimeError):
    """Cluster pursuit failed; carries any partial result that was reached."""

    def __init__(self, message, partial=None, round_index=None):
        super().__init__(message)
        self.partial = partial
        self.round_index = round_index


@dataclass(frozen=True)
class ScpConfig:
    """Inputs of a single-cluster run: seed vertex, estimated cluster size,
    and the multiplier sizing the candidate set Omega (default 10/9)."""

    seed_vertex: int
    n0_hat: int
    omega_factor: float = OMEGA_FACTOR_DEFAULT
    sp_overrides: Optional[dict] = None

    def validate(self, n: int):
        if not 0 <= self.seed_vertex < n:
            raise GraphError(f"seed vertex {self.seed_vertex} outside [0, {n})")
        if not 2 <= self.n0_hat <= n:
            raise GraphError(f"n0_hat must lie in [2, {n}], got {self.n0_hat}")
        if not self.omega_factor > 1.0:
            raise GraphError(f"omega_factor must exceed 1, got {self.omega_factor}")


@dataclass
class ClusterResult:
    """One recovered cluster with its intermediate stages.

    ``cluster == {seed} | (omega \\ lambda_sharp)`` holds structurally.
    """

    cluster: np.ndarray
    omega: np.ndarray
    lambda_sharp: np.ndarray
    sp_result: Optional[RecoveryResult]
    seed_vertex: int
    n0_hat: int
    omega_clamped: bool = False
    empty_budget: bool = False
    timings: dict = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return self.sp_result is None or self.sp_result.converged


def laplacian_operator(lap: LaplacianView) -> MatrixOperator:
    """The Laplacian as a column operator (sparse-backed, never dense)."""
    return MatrixOperator(lap.csc())


def _omega_budget(n, n0_hat, omega_factor):
    budget = math.ceil(omega_factor * (n0_hat - 1))
    clamped = budget > n - 1
    if clamped:
        warnings.warn(
            f"Omega budget {budget} exceeds n-1 = {n - 1}; clamping",
            RuntimeWarning, stacklevel=3,
        )
        budget = n - 1
    return budget, clamped


def _threshold_core(op: ColumnOperator, seed, n0_hat, omega_factor):
    n = op.shape[1]
    budget, clamped = _omega_budget(n, n0_hat, omega_factor)
    ell_seed = op.column(seed)
    scores = np.abs(op.correlate(ell_seed))
    scores[seed] = -1.0  # sorts last, so the seed never enters Omega
    order = np.argsort(-scores, kind="stable")  # ties: smaller index first
    return np.sort(order[:budget]), clamped


def threshold_stage(lap: LaplacianView, seed_vertex: int, n0_hat: int,
                    omega_factor: float = OMEGA_FACTOR_DEFAULT) -> np.ndarray:
    """Candidate set Omega: the ceil(omega_factor * (n0_hat - 1)) vertices
    whose Laplacian columns correlate most with the seed's column.

    Returns original vertex ids, seed excluded, sorted ascending. A budget
    beyond n - 1 is clamped with a warning.
    """
    cfg = ScpConfig(seed_vertex, n0_hat, omega_factor)
    cfg.validate(lap.n)
    omega, _ = _threshold_core(laplacian_operator(lap), seed_vertex, n0_hat,
                               omega_factor)
    return omega


def _scp_core(op: ColumnOperator, cfg: ScpConfig) -> ClusterResult:
    """SCP against any square column operator with Laplacian-like structure."""
    n = op.shape[1]
    cfg.validate(n)
    t0 = time.perf_counter()
    omega, clamped = _threshold_core(op, cfg.seed_vertex, cfg.n0_hat,
                                     cfg.omega_factor)
    t1 = time.perf_counter()
    indicator = np.zeros(n)
    indicator[omega] = 1.0
    indicator[cfg.seed_vertex] += 1.0
    y = op.apply(indicator)  # sum of ell_i over Omega, plus ell_seed
    s_z = omega.size - (cfg.n0_hat - 1)
    sp_result = None
    empty_budget = s_z <= 0
    if empty_budget:
        lambda_sharp = np.zeros(0, dtype=np.int64)
    else:
        phi = op.restrict(omega)
        overrides = dict(cfg.sp_overrides or {})
        sp_result = subspace_pursuit(RecoveryProblem(phi, y, int(s_z)),
                                     **overrides)
        nonzero = sp_result.support[sp_result.coefficients != 0.0]
        lambda_sharp = omega[nonzero]
    t2 = time.perf_counter()
    cluster = np.union1d(np.setdiff1d(omega, lambda_sharp, assume_unique=True),
                         [cfg.seed_vertex])
    return ClusterResult(
        cluster=cluster,
        omega=omega,
        lambda_sharp=lambda_sharp,
        sp_result=sp_result,
        seed_vertex=cfg.seed_vertex,
        n0_hat=cfg.n0_hat,
        omega_clamped=clamped,
        empty_budget=empty_budget,
        timings={"threshold_s": t1 - t0, "sp_s": t2 - t1, "total_s": t2 - t0},
    )


def scp(lap: LaplacianView, cfg: ScpConfig) -> ClusterResult:
    """Single cluster pursuit on a graph Laplacian.

    Builds Omega by thresholding, assembles ``y`` as the sum of the
    Laplacian columns over Omega plus the seed's column, runs subspace
    pursuit with budget ``|Omega| - (n0_hat - 1)`` for the indicator of the
    spurious set, and returns ``{seed} | (Omega \\ supp(z))``. If the
    clamped budget leaves no room for a spurious set, the whole of Omega is
    kept and the result is flagged.
    """
    return _scp_core(laplacian_operator(lap), cfg)


def connected_component_omp(lap: LaplacianView, seed_vertex: int) -> np.ndarray:
    """Recover the seed's connected component by plain OMP.

    Solves ``L_{-seed} x = -ell_seed`` greedily to residual 1e-8; the
    support plus the seed is exactly the seed's component (out-of-component
    columns have exactly zero correlation throughout). Stagnation before the
    tolerance indicates a bug or an invalid input and raises, carrying the
    partial support.
    """
    n = lap.n
    if not 0 <= seed_vertex < n:
        raise GraphError(f"seed vertex {seed_vertex} outside [0, {n})")
    op = laplacian_operator(lap)
    others = np.delete(np.arange(n), seed_vertex)
    phi = op.restrict(others)
    y = -op.column(seed_vertex)
    problem = RecoveryProblem(phi, y, sparsity=n - 1)
    result = omp(problem, residual_tol=1e-8)
    component = np.union1d(others[result.support], [seed_vertex])
    if result.stop_reason not in ("residual_tol", "residual_zero"):
        raise PursuitError(
            f"OMP stopped by {result.stop_reason} before reaching the residual "
            f"tolerance (residual {result.residual_norm:.3e})",
            partial=component,
        )
    return component


@dataclass
class IscpResult:
    """Full partition from iterated SCP.

    Vertices isolated by cluster removal go to a reject bucket; when any
    exist they form the extra final cluster of the partition.
    """

    partition: Partition
    rounds: list[ClusterResult]
    rejected: np.ndarray

    @property
    def labels(self) -> np.ndarray:
        return self.partition.assignment


def iscp(lap: LaplacianView, size_schedule: Union[int, Sequence[int]],
         omega_factor: float = OMEGA_FACTOR_DEFAULT,
         sp_overrides: Optional[dict] = None) -> IscpResult:
    """Iterated single cluster pursuit: peel off clusters until done.

    ``size_schedule`` is either one n0_hat per round (list of k entries; the
    k-th cluster is the remainder after k-1 rounds) or a single estimate,
    in which case k is inferred as round(n / n0_hat). Each round seeds SCP
    at the lowest-index unassigned vertex and recomputes the Laplacian on
    the induced subgraph of unassigned vertices.
    """
    graph = lap.graph
    n = graph.n
    if np.isscalar(size_schedule):
        n0 = int(size_schedule)
        if n0 < 2:
            raise GraphError("cluster size estimate must be at least 2")
        k = max(1, round(n / n0))
        sizes = [n0] * k
    else:
        sizes = [int(s) for s in size_schedule]
        if not sizes:
            raise GraphError("size schedule must not be empty")
        if sum(sizes) > n:
            raise GraphError(
                f"size schedule sums to {sum(sizes)}, exceeding n={n}"
            )
    assignment = np.full(n, -1, dtype=np.int64)
    rejected: list[int] = []
    rounds: list[ClusterResult] = []
    k = len(sizes)
    for round_index in range(k - 1):
        remaining = np.flatnonzero(assignment == -1)
        if remaining.size == 0:
            raise PursuitError(
                f"no vertices left before round {round_index}",
                partial=assignment.copy(), round_index=round_index,
            )
        sub = induced_subgraph(graph, remaining)
        if sub.isolated.size:
            rejected.extend(int(v) for v in sub.isolated)
            assignment[sub.isolated] = -2
            remaining = np.flatnonzero(assignment == -1)
            if remaining.size == 0:
                raise PursuitError(
                    f"all remaining vertices isolated in round {round_index}",
                    partial=assignment.copy(), round_index=round_index,
                )
            sub = induced_subgraph(graph, remaining)
        sub_lap = LaplacianView(sub.graph)
        n0_round = min(sizes[round_index], sub.graph.n)
        try:
            result = _scp_core(
                laplacian_operator(sub_lap),
                ScpConfig(seed_vertex=0, n0_hat=n0_round,
                          omega_factor=omega_factor, sp_overrides=sp_overrides),
            )
        except (GraphError, PursuitError) as exc:
            raise PursuitError(
                f"SCP failed in round {round_index}: {exc}",
                partial=assignment.copy(), round_index=round_index,
            ) from exc
        found = remaining[result.cluster]
        assignment[found] = round_index
        rounds.append(result)
    leftovers = np.flatnonzero(assignment == -1)
    if leftovers.size == 0:
        raise PursuitError(
            f"no vertices left for the final cluster {k - 1}",
            partial=assignment.copy(), round_index=k - 1,
        )
    assignment[leftovers] = k - 1
    n_labels = k
    if rejected:
        assignment[assignment == -2] = k
        n_labels = k + 1
    return IscpResult(
        partition=Partition(assignment, n_labels),
        rounds=rounds,
        rejected=np.asarray(sorted(rejected), dtype=np.int64),
    )


def _validate_bipartite(b):
    if np.any(b.data < 0):
        raise GraphError("co-clustering matrix must be nonnegative")
    row_sums = np.asarray(b.sum(axis=1)).ravel()
    col_sums = np.asarray(b.sum(axis=0)).ravel()
    if np.any(row_sums == 0):
        raise GraphError(
            f"zero row {int(np.flatnonzero(row_sums == 0)[0])} in matrix"
        )
    if np.any(col_sums == 0):
        raise GraphError(
            f"zero column {int(np.flatnonzero(col_sums == 0)[0])} in matrix"
        )
    return row_sums, col_sums


class BipartiteLaplacianOperator(ColumnOperator):
    """Implicit operator ``I - Dx^{-1} B Dy^{-1} B^T`` over the rows of B.

    Applied as two rectangular mat-vecs plus diagonal scalings; never
    materialized. Requires B nonnegative with no zero row or column.
    """

    def __init__(self, matrix):
        b = sp.csr_array(matrix) if sp.issparse(matrix) else sp.csr_array(
            np.asarray(matrix, dtype=np.float64))
        row_sums, col_sums = _validate_bipartite(b)
        self.b = b
        self.bt = b.T.tocsr()
        self.inv_row = 1.0 / row_sums
        self.inv_col = 1.0 / col_sums
        n = b.shape[0]
        self.shape = (n, n)

    def apply(self, x):
        x = np.asarray(x, dtype=np.float64)
        return x - self.inv_row * (self.b @ (self.inv_col * (self.bt @ x)))

    def correlate(self, r):
        r = np.asarray(r, dtype=np.float64)
        return r - self.b @ (self.inv_col * (self.bt @ (self.inv_row * r)))

    def column(self, j):
        e = np.zeros(self.shape[0])
        e[j] = 1.0
        return self.apply(e)

    def restrict(self, cols):
        return RestrictedOperator(self, cols)

    def column_memberships(self, row_indicator) -> np.ndarray:
        """``Dy^{-1} B^T 1_X``: fractional column membership for a row set."""
        return self.inv_col * (self.bt @ np.asarray(row_indicator, np.float64))


@dataclass
class CoclusterResult:
    row_partition: Partition
    col_partition: Partition
    rounds: list[ClusterResult]


def cocluster(matrix, n0x_hat: int, k: int,
              omega_factor: float = OMEGA_FACTOR_DEFAULT,
              sp_overrides: Optional[dict] = None) -> CoclusterResult:
    """Co-cluster a nonnegative rectangular matrix via the bipartite Laplacian.

    Iterates SCP against ``I - Dx^{-1} B Dy^{-1} B^T`` to find row clusters
    of size about ``n0x_hat``; each round's column cluster is read off from
    ``Dy^{-1} B^T 1_X`` thresholded at 1/2, and the found rows and columns
    are removed before the next round. The k-th clusters are the leftovers.
    """
    b = sp.csr_array(matrix) if sp.issparse(matrix) else sp.csr_array(
        np.asarray(matrix, dtype=np.float64))
    n_rows, n_cols = b.shape
    if k < 1:
        raise GraphError("k must be at least 1")
    _validate_bipartite(b)
    row_assign = np.full(n_rows, -1, dtype=np.int64)
    col_assign = np.full(n_cols, -1, dtype=np.int64)
    rounds: list[ClusterResult] = []
    for round_index in range(k - 1):
        rows_left = np.flatnonzero(row_assign == -1)
        cols_left = np.flatnonzero(col_assign == -1)
        if rows_left.size == 0 or cols_left.size == 0:
            raise PursuitError(
                f"nothing left to co-cluster in round {round_index}",
                partial=(row_assign.copy(), col_assign.copy()),
                round_index=round_index,
            )
        sub = b[rows_left][:, cols_left]
        op = BipartiteLaplacianOperator(sub)
        n0_round = min(n0x_hat, rows_left.size)
        result = _scp_core(op, ScpConfig(seed_vertex=0, n0_hat=n0_round,
                                         omega_factor=omega_factor,
                                         sp_overrides=sp_overrides))
        row_cluster = rows_left[result.cluster]
        indicator = np.zeros(rows_left.size)
        indicator[result.cluster] = 1.0
        membership = op.column_memberships(indicator)
        col_cluster = cols_left[membership >= 0.5]
        if col_cluster.size == 0:
            raise PursuitError(
                f"round {round_index} found no columns for its row cluster",
                partial=(row_assign.copy(), col_assign.copy()),
                round_index=round_index,
            )
        row_assign[row_cluster] = round_index
        col_assign[col_cluster] = round_index
        rounds.append(result)
    if np.all(row_assign != -1) or np.all(col_assign != -1):
        raise PursuitError(
            "earlier rounds consumed all rows or columns; nothing remains "
            f"for cluster {k - 1}",
            partial=(row_assign.copy(), col_assign.copy()), round_index=k - 1,
        )
    row_assign[row_assign == -1] = k - 1
    col_assign[col_assign == -1] = k - 1
    return CoclusterResult(
        row_partition=Partition(row_assign, k),
        col_partition=Partition(col_assign, k),
        rounds=rounds,
    )
