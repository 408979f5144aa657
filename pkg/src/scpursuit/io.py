"""Text formats: edge lists, label/cluster CSVs, point and matrix CSVs."""

from __future__ import annotations

import numpy as np

from .generators import Partition
from .graph import GraphError, SparseGraph, graph_from_arrays


def write_edge_list(graph: SparseGraph, path):
    """Edge-list text format: one ``u v [w]`` line per undirected edge.

    0-based ids; the weight column is omitted for unweighted graphs. A
    ``# n <count>`` comment records the vertex count so graphs with
    isolated vertices round-trip exactly.
    """
    us, vs, ws = graph.edge_arrays()
    weighted = graph.is_weighted()
    with open(path, "w") as fh:
        fh.write(f"# n {graph.n}\n")
        for u, v, w in zip(us, vs, ws):
            if weighted:
                fh.write(f"{u} {v} {float(w)!r}\n")
            else:
                fh.write(f"{u} {v}\n")


def read_edge_list(path, n=None) -> SparseGraph:
    """Parse the edge-list format written by :func:`write_edge_list`.

    ``#`` lines are comments; a ``# n <count>`` comment (or the ``n``
    argument) fixes the vertex count, otherwise max id + 1 is used.
    """
    us, vs, ws = [], [], []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                fields = line[1:].split()
                if n is None and len(fields) == 2 and fields[0] == "n":
                    n = int(fields[1])
                continue
            fields = line.split()
            if len(fields) not in (2, 3):
                raise GraphError(
                    f"{path}:{lineno}: expected 'u v [w]', got {line!r}"
                )
            us.append(int(fields[0]))
            vs.append(int(fields[1]))
            ws.append(float(fields[2]) if len(fields) == 3 else 1.0)
    us = np.asarray(us, dtype=np.int64)
    vs = np.asarray(vs, dtype=np.int64)
    if n is None:
        n = int(max(us.max(initial=-1), vs.max(initial=-1)) + 1)
    return graph_from_arrays(n, us, vs, np.asarray(ws))


def write_labels_csv(partition: Partition, path, vertex_ids=None):
    """``vertex,cluster`` rows; ``vertex_ids`` maps positions to ids."""
    ids = np.arange(partition.n) if vertex_ids is None else vertex_ids
    with open(path, "w") as fh:
        for v, c in zip(ids, partition.assignment):
            fh.write(f"{v},{c}\n")


def read_labels_csv(path, n=None) -> Partition:
    """Parse ``vertex,cluster`` rows into a Partition (header tolerated)."""
    vertices, clusters = [], []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split(",")
            if len(fields) != 2:
                raise GraphError(
                    f"{path}:{lineno}: expected 'vertex,cluster', got {line!r}"
                )
            try:
                vertices.append(int(fields[0]))
                clusters.append(int(fields[1]))
            except ValueError:
                if lineno == 1:  # header row
                    continue
                raise GraphError(f"{path}:{lineno}: non-integer row {line!r}")
    vertices = np.asarray(vertices, dtype=np.int64)
    clusters = np.asarray(clusters, dtype=np.int64)
    size = int(vertices.max() + 1) if n is None else n
    assignment = np.full(size, -1, dtype=np.int64)
    assignment[vertices] = clusters
    if np.any(assignment < 0):
        raise GraphError(f"{path}: not every vertex in [0, {size}) is labeled")
    # compact cluster ids so the Partition invariant (no empty cluster) holds
    used, compact = np.unique(assignment, return_inverse=True)
    return Partition(compact, int(used.size))


def write_cluster_csv(vertices, path):
    """One vertex id per line."""
    with open(path, "w") as fh:
        for v in np.asarray(vertices, dtype=np.int64):
            fh.write(f"{v}\n")


def read_cluster_csv(path) -> np.ndarray:
    out = []
    with open(path) as fh:
        for raw in fh:
            line = raw.strip()
            if line and not line.startswith("#"):
                out.append(int(line))
    return np.asarray(sorted(out), dtype=np.int64)


def read_points_csv(path) -> np.ndarray:
    """CSV point cloud, one point per row, no header."""
    pts = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    return pts


def read_matrix_csv(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)


def write_matrix_csv(matrix, path):
    np.savetxt(path, np.asarray(matrix, dtype=np.float64), delimiter=",")
