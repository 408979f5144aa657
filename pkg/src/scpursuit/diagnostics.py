"""Desk-scale verification of the recovery theory: restricted isometry
constants, coherence, common-neighbor statistics and exact-recovery checks.

Everything here is brute force or sampled on purpose: these routines exist
to check formulas, not to run at scale.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .generators import Partition, degree_split
from .graph import GraphError, LaplacianView, SparseGraph, as_index_set
from .solvers import ColumnOperator, MatrixOperator

EXHAUSTIVE_SUBSET_BUDGET = 1_000_000


class DiagnosticsError(ValueError):
    """Invalid diagnostics request (e.g. blown enumeration budget)."""


def default_alpha(n: int) -> float:
    """Degree-concentration constant 1/sqrt(ln n) used by the asymptotic
    formulas (meaningful once ln n > 1)."""
    return 1.0 / math.sqrt(math.log(n))


@dataclass
class RicReport:
    s: int
    delta_s: float
    worst_set: np.ndarray
    method: str  # "exhaustive" (exact) or "sampled" (lower bound)


def _subset_delta(dense, subset):
    sub = dense[:, subset]
    svals = np.linalg.svd(sub, compute_uv=False)
    return max(1.0 - svals[-1] ** 2, svals[0] ** 2 - 1.0)


def ric_bruteforce(operator: ColumnOperator, s: int,
                   budget: int = EXHAUSTIVE_SUBSET_BUDGET) -> RicReport:
    """Exact restricted isometry constant of order s by subset enumeration.

    delta_s is the max over all |S| = s column subsets of
    max(1 - sigma_min^2, sigma_max^2 - 1); subsets of smaller size are
    dominated, so enumerating size s exactly suffices. Refuses to run past
    ``budget`` subsets; use :func:`ric_sampled` then.
    """
    n_cols = operator.shape[1]
    if not 1 <= s <= n_cols:
        raise DiagnosticsError(f"order s={s} outside [1, {n_cols}]")
    count = math.comb(n_cols, s)
    if count > budget:
        raise DiagnosticsError(
            f"C({n_cols}, {s}) = {count} subsets exceeds the exhaustive "
            f"budget {budget}; use ric_sampled for a lower bound"
        )
    dense = operator.dense()
    best = -np.inf
    worst = None
    for subset in itertools.combinations(range(n_cols), s):
        delta = _subset_delta(dense, list(subset))
        if delta > best:  # strict: keeps the lexicographically first argmax
            best = delta
            worst = subset
    return RicReport(s=s, delta_s=float(best),
                     worst_set=np.array(worst, dtype=np.int64),
                     method="exhaustive")


def ric_sampled(operator: ColumnOperator, s: int, trials: int,
                seed: int = 0) -> RicReport:
    """Lower bound on delta_s from random subsets (max over ``trials``)."""
    n_cols = operator.shape[1]
    if not 1 <= s <= n_cols:
        raise DiagnosticsError(f"order s={s} outside [1, {n_cols}]")
    if trials < 1:
        raise DiagnosticsError("trials must be at least 1")
    rng = np.random.default_rng(seed)
    dense = operator.dense()
    best = -np.inf
    worst = None
    for _ in range(trials):
        subset = np.sort(rng.choice(n_cols, size=s, replace=False))
        delta = _subset_delta(dense, subset)
        if delta > best:
            best = delta
            worst = subset
    return RicReport(s=s, delta_s=float(best), worst_set=worst,
                     method="sampled")


def coherence(operator: ColumnOperator):
    """Normalized and raw coherence of an operator's columns.

    Returns ``(mu_normalized, max_abs_gram_offdiag)``: the largest
    normalized inner product between distinct columns, and the largest raw
    Gram off-diagonal magnitude. Exact, via the Gram matrix. Zero columns
    are rejected.
    """
    n_cols = operator.shape[1]
    if n_cols < 2:
        raise DiagnosticsError("coherence needs at least two columns")
    if isinstance(operator, MatrixOperator) and sp.issparse(operator.matrix):
        gram = (operator.matrix.T @ operator.matrix).tocoo()
        norms2 = np.zeros(n_cols)
        diag = gram.row == gram.col
        norms2[gram.row[diag]] = gram.data[diag]
        if np.any(norms2 <= 0):
            raise DiagnosticsError("operator has a zero column")
        off = ~diag
        raw = np.abs(gram.data[off])
        if raw.size == 0:
            return 0.0, 0.0
        scale = np.sqrt(norms2[gram.row[off]] * norms2[gram.col[off]])
        return float(np.max(raw / scale)), float(np.max(raw))
    dense = operator.dense()
    norms = np.linalg.norm(dense, axis=0)
    if np.any(norms == 0):
        raise DiagnosticsError("operator has a zero column")
    gram = dense.T @ dense
    np.fill_diagonal(gram, 0.0)
    raw = float(np.max(np.abs(gram)))
    normalized = float(np.max(np.abs(gram) / np.outer(norms, norms)))
    return normalized, raw


def chi_statistic(graph: SparseGraph, i: int, j: int) -> float:
    """Weighted common-neighbor count ``sum_k A_ik A_kj``."""
    if i == j:
        raise DiagnosticsError("chi statistic requires distinct vertices")
    for v in (i, j):
        if not 0 <= v < graph.n:
            raise GraphError(f"vertex {v} outside [0, {graph.n})")
    ni, wi = graph.neighbors(i), graph.neighbor_weights(i)
    nj, wj = graph.neighbors(j), graph.neighbor_weights(j)
    common, ii, jj = np.intersect1d(ni, nj, assume_unique=True,
                                    return_indices=True)
    del common
    return float(np.sum(wi[ii] * wj[jj]))


@dataclass
class IntraProductStats:
    """Sampled intra-cluster Laplacian column inner products vs the
    theoretical floor ``(1 - alpha) / (n0 (1 + alpha)^2)``."""

    n_pairs: int
    min_abs: float
    mean_abs: float
    fraction_above_floor: float
    floor_by_cluster: dict
    alpha_by_cluster: dict


def observed_alpha(graph: SparseGraph, part: Partition) -> dict:
    """Tightest degree-concentration constant per cluster.

    The smallest alpha with (1 - alpha) n0 p <= d0_i <= (1 + alpha) n0 p
    for every member, estimating p from the cluster's mean in-degree.
    The asymptotic default 1/sqrt(ln n) is not valid on small graphs, so
    statistics use this observed constant instead.
    """
    intra = degree_split(graph, part).intra
    alphas = {}
    for a in range(part.k):
        members = part.members(a)
        n0 = members.size
        if n0 < 2:
            alphas[a] = np.inf
            continue
        d0 = intra[members]
        p_hat = d0.mean() / (n0 - 1)
        if p_hat <= 0:
            alphas[a] = np.inf
            continue
        alphas[a] = float(np.max(np.abs(d0 / (n0 * p_hat) - 1.0)))
    return alphas


def intra_inner_product_floor(lap: LaplacianView, part: Partition,
                              sample_pairs: int, seed: int = 0
                              ) -> IntraProductStats:
    """Sample same-cluster pairs and compare |<ell_i, ell_j>| to the floor.

    The floor for a pair in a cluster of size n0 is
    ``(1 - alpha) / (n0 (1 + alpha)^2)``, i.e. the common-neighbor count
    lower bound divided by the largest possible squared degree, with alpha
    the cluster's observed concentration constant. A zero sample budget
    returns empty statistics.
    """
    if part.n != lap.n:
        raise GraphError("partition does not cover the graph")
    alphas = observed_alpha(lap.graph, part)
    floors = {}
    for a, alpha in alphas.items():
        n0 = part.members(a).size
        if not np.isfinite(alpha) or alpha >= 1.0 or n0 < 2:
            floors[a] = np.nan
        else:
            floors[a] = (1.0 - alpha) / (n0 * (1.0 + alpha) ** 2)
    if sample_pairs <= 0:
        return IntraProductStats(0, np.nan, np.nan, np.nan, floors, alphas)
    rng = np.random.default_rng(seed)
    eligible = [a for a in range(part.k) if part.members(a).size >= 2]
    if not eligible:
        raise DiagnosticsError("no cluster has two or more members")
    weights = np.array([math.comb(part.members(a).size, 2) for a in eligible],
                       dtype=np.float64)
    weights /= weights.sum()
    values = np.empty(sample_pairs)
    above = np.zeros(sample_pairs, dtype=bool)
    csc = lap.csc()
    for t in range(sample_pairs):
        a = eligible[rng.choice(len(eligible), p=weights)]
        members = part.members(a)
        i, j = rng.choice(members.size, size=2, replace=False)
        col_i = csc[:, [int(members[i])]]
        col_j = csc[:, [int(members[j])]]
        value = abs(float((col_i.T @ col_j).toarray()[0, 0]))
        values[t] = value
        above[t] = np.isfinite(floors[a]) and value >= floors[a]
    return IntraProductStats(
        n_pairs=sample_pairs,
        min_abs=float(values.min()),
        mean_abs=float(values.mean()),
        fraction_above_floor=float(above.mean()),
        floor_by_cluster=floors,
        alpha_by_cluster=alphas,
    )


@dataclass
class RegimeReport:
    value: float
    solvable_hint: str  # ">1", "<1" or "boundary"


def recovery_regime(k: int, cap_p: float, cap_q: float) -> RegimeReport:
    """Exact-recovery boundary value ``(sqrt(P) - sqrt(Q)) / k``.

    Purely advisory arithmetic for p = P ln(n)/n, q = Q ln(n)/n: above 1
    the exact recovery problem is polynomial-time solvable, below 1 it is
    not. No algorithm behavior depends on this.
    """
    if cap_p < 0 or cap_q < 0:
        raise DiagnosticsError("P and Q must be nonnegative")
    value = (math.sqrt(cap_p) - math.sqrt(cap_q)) / k
    if value > 1.0:
        hint = ">1"
    elif value < 1.0:
        hint = "<1"
    else:
        hint = "boundary"
    return RegimeReport(value=float(value), solvable_hint=hint)


@dataclass
class ErcReport:
    value: float
    passes: bool  # value < 1 guarantees OMP recovery on the support
    min_singular_value: float


def erc_check(operator: ColumnOperator, support) -> ErcReport:
    """Exact recovery condition value ``||Phi_S^+ Phi_{S^c}||_{1->1}``.

    Dense computation via the pseudo-inverse; rejects a rank-deficient
    Phi_S with its singular values in the message.
    """
    n_cols = operator.shape[1]
    support = as_index_set(support, n_cols, allow_empty=False, name="support")
    dense = operator.dense()
    phi_s = dense[:, support]
    svals = np.linalg.svd(phi_s, compute_uv=False)
    if svals[-1] <= svals[0] * max(phi_s.shape) * np.finfo(float).eps:
        raise DiagnosticsError(
            f"Phi_S is rank deficient; singular values {svals.tolist()}"
        )
    complement = np.setdiff1d(np.arange(n_cols), support, assume_unique=True)
    if complement.size == 0:
        return ErcReport(0.0, True, float(svals[-1]))
    product = np.linalg.pinv(phi_s) @ dense[:, complement]
    value = float(np.max(np.sum(np.abs(product), axis=0)))
    return ErcReport(value=value, passes=value < 1.0,
                     min_singular_value=float(svals[-1]))


def laplacian_eigenvalues(graph: SparseGraph) -> np.ndarray:
    """All eigenvalues of the random-walk Laplacian, ascending.

    Computed densely through the symmetric form D^{1/2} L D^{-1/2}, which
    shares the spectrum; desk scale only.
    """
    if graph.isolated_vertices().size:
        raise GraphError("spectrum undefined with zero-degree vertices")
    if graph.n > 4096:
        raise DiagnosticsError("dense eigensolve capped at n = 4096")
    d_half = 1.0 / np.sqrt(graph.degrees)
    a = graph.to_scipy().toarray()
    sym = np.eye(graph.n) - (a * d_half[:, None]) * d_half[None, :]
    return np.linalg.eigvalsh(sym)


def ric_spectral_bound(graph: SparseGraph, s: int) -> float:
    """Eigenvalue formula ``max(1 - (1 - s/n) lambda_2^2, lambda_n^2 - 1)``
    bounding delta_s for a connected graph on n vertices."""
    eigvals = laplacian_eigenvalues(graph)
    n = graph.n
    return float(max(1.0 - (1.0 - s / n) * eigvals[1] ** 2,
                     eigvals[-1] ** 2 - 1.0))


@dataclass
class PerturbationReport:
    """Split ``L = L0 + E1 + E2`` of a noisy-block Laplacian.

    E1 lives on the intra-cluster adjacency support, E2 on the
    inter-cluster support; their infinity norms are computed by direct row
    sums and compared against the noise-ratio bounds.
    """

    max_noise_ratio: float
    e1_inf: float
    e2_inf: float
    e1_bound_ok: bool  # ||E1||_inf <= max r_i
    e2_bound_ok: bool  # ||E2||_inf <= max r_i / (1 + r_i) + 1e-12


def perturbation_split(graph: SparseGraph, part: Partition
                       ) -> PerturbationReport:
    """Compare L against the Laplacian of the intra-cluster subgraph.

    Requires every vertex to keep positive in-community degree (otherwise
    L0 is undefined).
    """
    if part.n != graph.n:
        raise GraphError("partition does not cover the graph")
    split = degree_split(graph, part)
    if np.any(split.intra == 0):
        raise DiagnosticsError(
            "some vertex has no intra-cluster edge; L0 is undefined"
        )
    rows = np.repeat(np.arange(graph.n), np.diff(graph.row_offsets))
    cols = graph.col_indices
    same = part.assignment[rows] == part.assignment[cols]
    n = graph.n
    lap = LaplacianView(graph).csr()
    intra_adj = sp.csr_array(
        (graph.weights[same], (rows[same], cols[same])), shape=(n, n))
    lap0 = sp.eye_array(n, format="csr") - sp.csr_array(
        (intra_adj.data * np.repeat(1.0 / split.intra,
                                    np.diff(intra_adj.indptr)),
         intra_adj.indices, intra_adj.indptr), shape=(n, n))
    err = (lap - lap0).tocoo()
    keep = err.data != 0.0
    err_rows, err_cols, err_data = err.row[keep], err.col[keep], err.data[keep]
    on_intra = part.assignment[err_rows] == part.assignment[err_cols]
    e1_inf = float(np.max(np.bincount(
        err_rows[on_intra], weights=np.abs(err_data[on_intra]), minlength=n),
        initial=0.0))
    e2_inf = float(np.max(np.bincount(
        err_rows[~on_intra], weights=np.abs(err_data[~on_intra]), minlength=n),
        initial=0.0))
    max_r = float(np.max(split.noise_ratio))
    return PerturbationReport(
        max_noise_ratio=max_r,
        e1_inf=e1_inf,
        e2_inf=e2_inf,
        e1_bound_ok=e1_inf <= max_r,
        e2_bound_ok=e2_inf <= max_r / (1.0 + max_r) + 1e-12,
    )
