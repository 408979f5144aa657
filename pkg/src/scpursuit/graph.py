"""Sparse undirected graphs and the random-walk Laplacian as an implicit operator."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp


class GraphError(ValueError):
    """Invalid graph construction or graph operation."""


def as_index_set(indices, n, *, allow_empty=True, name="index set"):
    """Validate a collection of vertex/column indices.

    Returns a strictly increasing int64 array with all entries in ``[0, n)``.
    Duplicates are rejected rather than silently merged, since several
    operations (e.g. column sums) are sensitive to multiplicity.
    """
    idx = np.asarray(indices, dtype=np.int64).ravel()
    if idx.size == 0:
        if not allow_empty:
            raise GraphError(f"{name} must not be empty")
        return idx
    if idx.min() < 0 or idx.max() >= n:
        raise GraphError(f"{name} contains indices outside [0, {n})")
    out = np.unique(idx)
    if out.size != idx.size:
        raise GraphError(f"{name} contains duplicate indices")
    return out


@dataclass(frozen=True)
class SparseGraph:
    """Undirected weighted graph in compressed sparse row layout.

    Invariants (established by the constructors in this module):

    * the adjacency is symmetric: entry (i, j) is stored iff (j, i) is, with
      equal weight;
    * no self-loops, no duplicate entries, all weights strictly positive;
    * ``degrees[i]`` is the weighted row sum of row ``i``.

    Instances are immutable and safe to share between threads.
    """

    n: int
    row_offsets: np.ndarray
    col_indices: np.ndarray
    weights: np.ndarray
    degrees: np.ndarray

    @property
    def edge_count(self) -> int:
        return self.col_indices.size // 2

    def neighbors(self, i):
        lo, hi = self.row_offsets[i], self.row_offsets[i + 1]
        return self.col_indices[lo:hi]

    def neighbor_weights(self, i):
        lo, hi = self.row_offsets[i], self.row_offsets[i + 1]
        return self.weights[lo:hi]

    def degree_counts(self) -> np.ndarray:
        """Unweighted degree (neighbor count) per vertex."""
        return np.diff(self.row_offsets)

    def isolated_vertices(self) -> np.ndarray:
        return np.flatnonzero(self.degrees == 0.0)

    def is_weighted(self) -> bool:
        return bool(self.weights.size) and not np.all(self.weights == 1.0)

    def to_scipy(self) -> sp.csr_array:
        """Adjacency matrix as a scipy CSR array (shares the CSR buffers)."""
        return sp.csr_array(
            (self.weights, self.col_indices, self.row_offsets), shape=(self.n, self.n)
        )

    def edge_arrays(self):
        """Each undirected edge once, as ``(u, v, w)`` arrays with u < v."""
        rows = np.repeat(np.arange(self.n), np.diff(self.row_offsets))
        keep = rows < self.col_indices
        return rows[keep], self.col_indices[keep], self.weights[keep]


def _csr_from_directed(n, src, dst, wts):
    """Assemble CSR arrays from directed entry triples (assumed pre-validated)."""
    order = np.lexsort((dst, src))
    src, dst, wts = src[order], dst[order], wts[order]
    counts = np.bincount(src, minlength=n)
    row_offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=row_offsets[1:])
    degrees = np.bincount(src, weights=wts, minlength=n)
    return SparseGraph(
        n=int(n),
        row_offsets=row_offsets,
        col_indices=dst.astype(np.int64),
        weights=wts.astype(np.float64),
        degrees=degrees.astype(np.float64),
    )


def graph_from_arrays(n, us, vs, weights=None) -> SparseGraph:
    """Build a SparseGraph from parallel edge arrays (each edge listed once).

    Vectorized constructor used by the generators; validates the same
    contract as :func:`build_graph`.
    """
    us = np.asarray(us, dtype=np.int64).ravel()
    vs = np.asarray(vs, dtype=np.int64).ravel()
    if us.shape != vs.shape:
        raise GraphError("edge endpoint arrays must have equal length")
    if weights is None:
        ws = np.ones(us.size, dtype=np.float64)
    else:
        ws = np.asarray(weights, dtype=np.float64).ravel()
        if ws.shape != us.shape:
            raise GraphError("weight array must match edge arrays")
    if n < 0:
        raise GraphError("vertex count must be nonnegative")
    if us.size:
        if us.min() < 0 or vs.min() < 0 or us.max() >= n or vs.max() >= n:
            bad = np.flatnonzero((us < 0) | (vs < 0) | (us >= n) | (vs >= n))[0]
            raise GraphError(
                f"edge ({us[bad]}, {vs[bad]}) has endpoint outside [0, {n})"
            )
        loops = np.flatnonzero(us == vs)
        if loops.size:
            raise GraphError(f"self-loop at vertex {us[loops[0]]} is not allowed")
        if not np.all(np.isfinite(ws)) or np.any(ws <= 0):
            bad = np.flatnonzero(~np.isfinite(ws) | (ws <= 0))[0]
            raise GraphError(
                f"edge ({us[bad]}, {vs[bad]}) has invalid weight {ws[bad]}"
            )
        a = np.minimum(us, vs)
        b = np.maximum(us, vs)
        order = np.lexsort((b, a))
        a, b = a[order], b[order]
        dup = np.flatnonzero((a[1:] == a[:-1]) & (b[1:] == b[:-1]))
        if dup.size:
            raise GraphError(f"duplicate edge ({a[dup[0]]}, {b[dup[0]]})")
    src = np.concatenate([us, vs])
    dst = np.concatenate([vs, us])
    wboth = np.concatenate([ws, ws])
    return _csr_from_directed(n, src, dst, wboth)


def build_graph(n, edges) -> SparseGraph:
    """Build a symmetric CSR graph from ``(u, v)`` or ``(u, v, weight)`` tuples.

    Rejects self-loops, duplicate edges (in either orientation), endpoints
    outside ``[0, n)`` and non-positive weights. Unweighted edges get
    weight 1.
    """
    us, vs, ws = [], [], []
    for edge in edges:
        if len(edge) == 2:
            u, v = edge
            w = 1.0
        elif len(edge) == 3:
            u, v, w = edge
        else:
            raise GraphError(f"edge {edge!r} must be (u, v) or (u, v, w)")
        us.append(u)
        vs.append(v)
        ws.append(w)
    return graph_from_arrays(n, np.array(us, dtype=np.int64),
                             np.array(vs, dtype=np.int64),
                             np.array(ws, dtype=np.float64))


def graph_from_adjacency(matrix) -> SparseGraph:
    """Validate a dense or scipy-sparse adjacency matrix and wrap it.

    The matrix must be square, exactly symmetric, nonnegative, with a zero
    diagonal. This is the input-validation path used by the estimator API.
    """
    if isinstance(matrix, SparseGraph):
        return matrix
    if sp.issparse(matrix):
        m = sp.csr_array(matrix)
        if m.shape[0] != m.shape[1]:
            raise GraphError(f"adjacency must be square, got {m.shape}")
        diff = m - m.T.tocsr()
        if diff.nnz and np.any(diff.data != 0):
            raise GraphError("adjacency matrix is not symmetric")
        coo = m.tocoo()
        if np.any((coo.row == coo.col) & (coo.data != 0)):
            raise GraphError("adjacency matrix has nonzero diagonal (self-loops)")
        keep = (coo.row < coo.col) & (coo.data != 0)
        return graph_from_arrays(m.shape[0], coo.row[keep], coo.col[keep],
                                 coo.data[keep])
    dense = np.asarray(matrix, dtype=np.float64)
    if dense.ndim != 2 or dense.shape[0] != dense.shape[1]:
        raise GraphError(f"adjacency must be a square matrix, got shape {dense.shape}")
    if not np.array_equal(dense, dense.T):
        raise GraphError("adjacency matrix is not symmetric")
    us, vs = np.nonzero(np.triu(dense, k=1))
    if np.any(np.diag(dense) != 0):
        raise GraphError("adjacency matrix has nonzero diagonal (self-loops)")
    return graph_from_arrays(dense.shape[0], us, vs, dense[us, vs])


def bfs_component(graph: SparseGraph, seed: int) -> np.ndarray:
    """Vertices of the connected component containing ``seed`` (sorted)."""
    if not 0 <= seed < graph.n:
        raise GraphError(f"seed {seed} outside [0, {graph.n})")
    seen = np.zeros(graph.n, dtype=bool)
    seen[seed] = True
    queue = deque([seed])
    while queue:
        u = queue.popleft()
        for v in graph.neighbors(u):
            if not seen[v]:
                seen[v] = True
                queue.append(v)
    return np.flatnonzero(seen)


def connected_components(graph: SparseGraph) -> list[np.ndarray]:
    """All connected components, ordered by smallest member vertex."""
    unvisited = np.ones(graph.n, dtype=bool)
    comps = []
    for start in range(graph.n):
        if unvisited[start]:
            comp = bfs_component(graph, start)
            unvisited[comp] = False
            comps.append(comp)
    return comps


@dataclass(frozen=True)
class InducedSubgraph:
    """Result of restricting a graph to a vertex subset."""

    graph: SparseGraph
    kept: np.ndarray          # new index i corresponds to original vertex kept[i]
    old_to_new: np.ndarray    # -1 for dropped vertices
    isolated: np.ndarray      # original ids left with no internal edge


def induced_subgraph(graph: SparseGraph, keep) -> InducedSubgraph:
    """Subgraph on ``keep`` with all internal edges.

    Vertices isolated inside the subgraph are reported, not dropped; the
    caller decides what to do with them.
    """
    keep = as_index_set(keep, graph.n, allow_empty=False, name="keep")
    mask = np.zeros(graph.n, dtype=bool)
    mask[keep] = True
    old_to_new = np.full(graph.n, -1, dtype=np.int64)
    old_to_new[keep] = np.arange(keep.size)
    rows = np.repeat(np.arange(graph.n), np.diff(graph.row_offsets))
    sel = mask[rows] & mask[graph.col_indices]
    sub = _csr_from_directed(
        keep.size,
        old_to_new[rows[sel]],
        old_to_new[graph.col_indices[sel]],
        graph.weights[sel],
    )
    isolated = keep[sub.degrees == 0.0]
    return InducedSubgraph(graph=sub, kept=keep, old_to_new=old_to_new,
                           isolated=isolated)


def drop_isolated(graph: SparseGraph):
    """Remove zero-degree vertices; returns ``(subgraph, kept original ids)``."""
    kept = np.flatnonzero(graph.degrees > 0.0)
    if kept.size == 0:
        raise GraphError("graph has no vertices with positive degree")
    if kept.size == graph.n:
        return graph, kept
    result = induced_subgraph(graph, kept)
    return result.graph, result.kept


class LaplacianView:
    """Random-walk Laplacian ``L = I - D^{-1} A`` of a graph, kept implicit.

    Only the graph and the inverse degrees are stored; sparse CSR/CSC forms
    of L are cached lazily for matvec and column-slice access. A dense L is
    never formed here. Column ``i`` has entry 1 at position ``i`` and
    ``-A_ik / d_k`` at each neighbor ``k`` of ``i``.

    Construction rejects graphs with zero-degree vertices (use
    :func:`drop_isolated` first).
    """

    def __init__(self, graph: SparseGraph):
        iso = graph.isolated_vertices()
        if iso.size:
            shown = iso[:5].tolist()
            raise GraphError(
                f"Laplacian undefined: zero-degree vertices {shown}"
                f"{'...' if iso.size > 5 else ''} (drop isolated vertices first)"
            )
        self.graph = graph
        self.inv_degrees = 1.0 / graph.degrees
        self._csr = None
        self._csc = None

    @property
    def n(self) -> int:
        return self.graph.n

    def csr(self) -> sp.csr_array:
        if self._csr is None:
            a = self.graph.to_scipy()
            scaled = sp.csr_array(
                (a.data * np.repeat(self.inv_degrees, np.diff(a.indptr)),
                 a.indices, a.indptr),
                shape=a.shape,
            )
            self._csr = (sp.eye_array(self.n, format="csr") - scaled).tocsr()
        return self._csr

    def csc(self) -> sp.csc_array:
        if self._csc is None:
            self._csc = self.csr().tocsc()
        return self._csc

    def column(self, i):
        """Sparse column ``ell_i`` as ``(rows, values)`` with rows ascending."""
        if not 0 <= i < self.n:
            raise GraphError(f"vertex {i} outside [0, {self.n})")
        nbrs = self.graph.neighbors(i)
        vals = -self.graph.neighbor_weights(i) * self.inv_degrees[nbrs]
        pos = int(np.searchsorted(nbrs, i))
        rows = np.insert(nbrs, pos, i)
        values = np.insert(vals, pos, 1.0)
        return rows, values

    def column_dense(self, i) -> np.ndarray:
        rows, values = self.column(i)
        out = np.zeros(self.n)
        out[rows] = values
        return out

    def apply_submatrix(self, cols, x) -> np.ndarray:
        """``L_cols @ x``: the weighted sum of Laplacian columns in ``cols``."""
        cols = as_index_set(cols, self.n, name="cols")
        x = np.asarray(x, dtype=np.float64).ravel()
        if x.size != cols.size:
            raise GraphError(f"coefficient vector has length {x.size}, "
                             f"expected {cols.size}")
        if cols.size == 0:
            return np.zeros(self.n)
        return self.csc()[:, cols] @ x

    def apply_submatrix_transpose(self, cols, r) -> np.ndarray:
        """``L_cols^T @ r``: inner products of the selected columns with r."""
        cols = as_index_set(cols, self.n, name="cols")
        r = np.asarray(r, dtype=np.float64).ravel()
        if r.size != self.n:
            raise GraphError(f"vector has length {r.size}, expected {self.n}")
        if cols.size == 0:
            return np.zeros(0)
        return (self.csc().T @ r)[cols]


def laplacian_column(lap: LaplacianView, i):
    """Module-level alias for :meth:`LaplacianView.column`."""
    return lap.column(i)


def apply_submatrix(lap: LaplacianView, cols, x):
    return lap.apply_submatrix(cols, x)


def apply_submatrix_transpose(lap: LaplacianView, cols, r):
    return lap.apply_submatrix_transpose(cols, r)
