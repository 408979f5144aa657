"""Seeded Erdos-Renyi and stochastic block model generators with ground truth."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .graph import GraphError, SparseGraph, graph_from_arrays

# Below this probability, pair-by-pair Bernoulli sampling wastes almost all
# of its draws; a geometric-gap sampler over linearized pair indices is used
# instead. Both samplers realize the same Bernoulli(p) edge process.
GEOMETRIC_SAMPLER_CUTOFF = 0.01


def substream(master_seed: int, *path: int) -> np.random.Generator:
    """Independent generator for (master_seed, path).

    Stream derivation rule used throughout the package: the stream for step
    ``path`` is ``SeedSequence(master_seed, spawn_key=path)``. Distinct paths
    give statistically independent streams; the same pair is bit-reproducible.
    """
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=path))


def stream_seed(master_seed: int, *path: int) -> int:
    """A single 64-bit seed derived from (master_seed, path); feedable to
    any of the generator functions to reproduce one trial in isolation."""
    ss = np.random.SeedSequence(master_seed, spawn_key=path)
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class Partition:
    """Assignment of vertices to clusters ``0..k-1``; every cluster nonempty."""

    assignment: np.ndarray
    k: int

    def __post_init__(self):
        a = np.asarray(self.assignment, dtype=np.int64)
        object.__setattr__(self, "assignment", a)
        if self.k < 1:
            raise GraphError("partition needs at least one cluster")
        if a.size == 0:
            raise GraphError("partition covers no vertices")
        if a.min() < 0 or a.max() >= self.k:
            raise GraphError(f"cluster ids must lie in [0, {self.k})")
        if np.unique(a).size != self.k:
            raise GraphError("every cluster must be nonempty")

    @property
    def n(self) -> int:
        return self.assignment.size

    def members(self, a: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == a)

    def indicator(self, a: int) -> np.ndarray:
        return (self.assignment == a).astype(np.float64)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.k)

    @classmethod
    def from_blocks(cls, sizes: Sequence[int]) -> "Partition":
        sizes = np.asarray(sizes, dtype=np.int64)
        return cls(np.repeat(np.arange(sizes.size), sizes), int(sizes.size))


@dataclass(frozen=True)
class SbmParams:
    """Parameters of the stochastic block model G(n, k, p, q).

    ``sizes`` overrides the equal-size default; equal sizes require k | n.
    Requires 0 <= q <= p <= 1.
    """

    n: int
    k: int
    p: float
    q: float
    sizes: Optional[tuple[int, ...]] = None

    def __post_init__(self):
        if self.k < 1:
            raise GraphError("k must be >= 1")
        if not (0.0 <= self.q <= self.p <= 1.0):
            raise GraphError(f"need 0 <= q <= p <= 1, got p={self.p}, q={self.q}")
        if self.sizes is not None:
            sizes = tuple(int(s) for s in self.sizes)
            object.__setattr__(self, "sizes", sizes)
            if len(sizes) != self.k:
                raise GraphError(f"got {len(sizes)} sizes for k={self.k} clusters")
            if any(s < 1 for s in sizes):
                raise GraphError("cluster sizes must be positive")
            if sum(sizes) != self.n:
                raise GraphError(f"sizes sum to {sum(sizes)}, expected n={self.n}")
        elif self.n % self.k != 0:
            raise GraphError(
                f"equal-size default requires k | n; got n={self.n}, k={self.k}"
            )

    def block_sizes(self) -> np.ndarray:
        if self.sizes is not None:
            return np.asarray(self.sizes, dtype=np.int64)
        return np.full(self.k, self.n // self.k, dtype=np.int64)


class SbmSample(NamedTuple):
    graph: SparseGraph
    partition: Partition
    permutation: Optional[np.ndarray]  # None unless permute was requested


def _unrank_triangle(t, m):
    """Map linear indices over {(i, j): 0 <= i < j < m} back to pairs.

    Row-major order: pair (i, j) has index i*(2m - i - 1)/2 + (j - i - 1).
    Uses searchsorted over exact integer row offsets, so there is no
    floating-point unranking error.
    """
    rows = np.arange(m - 1, dtype=np.int64)
    offsets = np.concatenate([[0], np.cumsum(m - 1 - rows)])
    i = np.searchsorted(offsets, t, side="right") - 1
    j = t - offsets[i] + i + 1
    return i, j


def _sample_pair_indices(rng, total, prob, sampler):
    """Indices of successes among ``total`` Bernoulli(prob) trials.

    ``sampler`` is "auto", "dense" or "geometric"; dense draws one uniform
    per pair, geometric skips between successes. Identical in distribution.
    """
    if prob <= 0.0 or total == 0:
        return np.zeros(0, dtype=np.int64)
    if prob >= 1.0:
        return np.arange(total, dtype=np.int64)
    if sampler == "auto":
        sampler = "geometric" if prob < GEOMETRIC_SAMPLER_CUTOFF else "dense"
    if sampler == "dense":
        return np.flatnonzero(rng.random(total) < prob).astype(np.int64)
    if sampler != "geometric":
        raise GraphError(f"unknown sampler {sampler!r}")
    hits = []
    pos = -1
    expected = max(int(total * prob * 1.2) + 16, 64)
    while True:
        gaps = rng.geometric(prob, size=expected)
        steps = np.cumsum(gaps, dtype=np.int64)
        idx = pos + steps
        inside = idx < total
        hits.append(idx[inside])
        if not inside.all():
            break
        pos = int(idx[-1])
    return np.concatenate(hits) if hits else np.zeros(0, dtype=np.int64)


def gen_sbm(params: SbmParams, seed, *, permute: bool = False,
            sampler: str = "auto") -> SbmSample:
    """Draw a graph from G(n, k, p, q) with its ground-truth partition.

    The partition is fixed as contiguous index blocks before any edge is
    sampled; every unordered pair is then included independently with
    probability p (same block) or q (different blocks). The same
    (params, seed, permute) triple reproduces the sample bit-for-bit.

    With ``permute=True`` a seeded relabeling is applied to vertices (the
    partition follows) and returned, mirroring randomly permuted adjacency
    displays.
    """
    rng = np.random.default_rng(seed)
    sizes = params.block_sizes()
    starts = np.concatenate([[0], np.cumsum(sizes)])
    us_parts, vs_parts = [], []
    for a in range(params.k):
        m = int(sizes[a])
        hit = _sample_pair_indices(rng, m * (m - 1) // 2, params.p, sampler)
        if hit.size:
            i, j = _unrank_triangle(hit, m)
            us_parts.append(i + starts[a])
            vs_parts.append(j + starts[a])
        for b in range(a + 1, params.k):
            mb = int(sizes[b])
            hit = _sample_pair_indices(rng, m * mb, params.q, sampler)
            if hit.size:
                us_parts.append(hit // mb + starts[a])
                vs_parts.append(hit % mb + starts[b])
    if us_parts:
        us = np.concatenate(us_parts)
        vs = np.concatenate(vs_parts)
    else:
        us = np.zeros(0, dtype=np.int64)
        vs = np.zeros(0, dtype=np.int64)
    assignment = np.repeat(np.arange(params.k), sizes)
    perm = None
    if permute:
        perm = rng.permutation(params.n)
        us, vs = perm[us], perm[vs]
        new_assignment = np.empty_like(assignment)
        new_assignment[perm] = assignment
        assignment = new_assignment
    graph = graph_from_arrays(params.n, us, vs)
    return SbmSample(graph, Partition(assignment, params.k), perm)


def gen_er(n0: int, p: float, seed, *, sampler: str = "auto") -> SparseGraph:
    """Draw a graph from the Erdos-Renyi model G(n0, p): a one-block SBM."""
    sample = gen_sbm(SbmParams(n=n0, k=1, p=p, q=0.0), seed, sampler=sampler)
    return sample.graph


class DegreeSplit(NamedTuple):
    intra: np.ndarray       # weighted degree into the own cluster, d0_i
    inter: np.ndarray       # weighted degree into other clusters, de_i
    noise_ratio: np.ndarray  # r_i = de_i / d0_i, inf where d0_i = 0


def degree_split(graph: SparseGraph, part: Partition) -> DegreeSplit:
    """Per-vertex in-community / out-of-community degrees and noise ratio."""
    if part.n != graph.n:
        raise GraphError(
            f"partition covers {part.n} vertices, graph has {graph.n}"
        )
    rows = np.repeat(np.arange(graph.n), np.diff(graph.row_offsets))
    same = part.assignment[rows] == part.assignment[graph.col_indices]
    intra = np.bincount(rows[same], weights=graph.weights[same], minlength=graph.n)
    inter = graph.degrees - intra
    ratio = np.divide(inter, intra, out=np.full(graph.n, np.inf), where=intra > 0)
    return DegreeSplit(intra, inter, ratio)
