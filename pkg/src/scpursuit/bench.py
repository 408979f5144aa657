"""Seeded, replayable experiment runner for the synthetic benchmarks.

Every trial's graph is a pure function of the spec and a per-trial seed
derived from the master seed, so recovery outcomes replay bit-identically;
wall times are measured around the algorithm call only and are the one
non-reproducible column.
"""

from __future__ import annotations

import csv
import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from typing import Optional, Sequence

import numpy as np

from .baselines import DENSE_EIGENSOLVE_BUDGET, spectral_clustering
from .generators import Partition, SbmParams, gen_sbm, stream_seed
from .graph import GraphError, LaplacianView
from .pipeline import misclassification, partition_accuracy
from .pursuit import (OMEGA_FACTOR_DEFAULT, PursuitError, ScpConfig, cocluster,
                      iscp, scp)

KINDS = ("noise-sweep", "scaling", "recovery", "single-cluster",
         "full-partition", "cocluster")
ALGORITHMS = ("scp", "iscp", "sc")
SCALING_REGIMES = ("fixed-n0", "fixed-k", "sqrt")


class BenchError(ValueError):
    """Invalid experiment specification."""


@dataclass
class ExperimentSpec:
    """One benchmark description; a flat mirror of the TOML config format."""

    kind: str
    master_seed: int = 0
    trials: int = 1
    algorithms: tuple = ("scp",)
    # SBM parameters; p/q may be given directly or via the log-form factors
    # p = p_factor ln(n)/sqrt(n), q = q_factor ln(n)/n.
    n: Optional[int] = None
    k: Optional[int] = None
    p: Optional[float] = None
    q: Optional[float] = None
    p_factor: Optional[float] = None
    q_factor: Optional[float] = None
    sizes: Optional[tuple] = None
    # sweep axes
    q_grid: Optional[tuple] = None    # raw q values
    Q_grid: Optional[tuple] = None    # scaled: q = Q / (n - n0)
    n_grid: Optional[tuple] = None
    regime: str = "fixed-n0"
    n0: Optional[int] = None
    # algorithm knobs
    n0_hat: Optional[int] = None
    omega_factor: float = OMEGA_FACTOR_DEFAULT
    seed_vertex: int = 0
    sc_max_n: int = 3000
    # co-clustering shape
    rows: Optional[int] = None
    cols: Optional[int] = None
    workers: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise BenchError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.trials < 1:
            raise BenchError("trials must be at least 1")
        self.algorithms = tuple(self.algorithms)
        for alg in self.algorithms:
            if alg not in ALGORITHMS:
                raise BenchError(f"unknown algorithm {alg!r}")
        if self.regime not in SCALING_REGIMES:
            raise BenchError(
                f"regime must be one of {SCALING_REGIMES}, got {self.regime!r}"
            )
        for name in ("q_grid", "Q_grid", "n_grid", "sizes"):
            value = getattr(self, name)
            if value is not None:
                setattr(self, name, tuple(value))


@dataclass
class ExperimentRecord:
    """One algorithm run on one trial graph; carries everything needed to
    regenerate the graph (resolved params + seed) and rerun bit-identically."""

    kind: str
    grid_index: int
    params: dict
    trial: int
    seed: int
    algorithm: str
    misclassification: Optional[float]
    accuracy: Optional[float]
    wall_time_s: float
    success: bool
    note: str = ""


def load_spec(path) -> ExperimentSpec:
    """Read an ExperimentSpec from a flat TOML key/value document."""
    try:
        import tomllib
    except ModuleNotFoundError:
        import tomli as tomllib
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    valid = set(ExperimentSpec.__dataclass_fields__)
    unknown = set(data) - valid
    if unknown:
        raise BenchError(f"unknown config keys: {sorted(unknown)}")
    if "kind" not in data:
        raise BenchError("config must set 'kind'")
    return ExperimentSpec(**data)


def _resolve_pq(spec: ExperimentSpec, n: int):
    if spec.p is not None:
        p = spec.p
    elif spec.p_factor is not None:
        p = spec.p_factor * math.log(n) / math.sqrt(n)
    else:
        raise BenchError("set either p or p_factor")
    if spec.q is not None:
        q = spec.q
    elif spec.q_factor is not None:
        q = spec.q_factor * math.log(n) / n
    else:
        q = 0.0
    return p, q


def _block_sizes(params: SbmParams):
    return params.block_sizes()


def _timed(fn):
    start = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - start


def _run_algorithms(spec, params, grid_index, trial, resolved):
    """Generate the trial graph and run every requested algorithm on it."""
    seed = stream_seed(spec.master_seed, grid_index, trial)
    sample = gen_sbm(params, seed)
    graph, truth = sample.graph, sample.partition
    sizes = _block_sizes(params)
    n0 = int(sizes[0])
    records = []
    for algorithm in spec.algorithms:
        misclass = None
        accuracy = None
        success = True
        note = ""
        elapsed = float("nan")
        try:
            if algorithm == "scp":
                lap = LaplacianView(graph)
                cfg = ScpConfig(seed_vertex=spec.seed_vertex,
                                n0_hat=spec.n0_hat or n0,
                                omega_factor=spec.omega_factor)
                result, elapsed = _timed(lambda: scp(lap, cfg))
                truth_cluster = truth.members(
                    int(truth.assignment[spec.seed_vertex]))
                misclass = misclassification(result.cluster, truth_cluster)
            elif algorithm == "iscp":
                lap = LaplacianView(graph)
                schedule = list(sizes)
                result, elapsed = _timed(
                    lambda: iscp(lap, schedule,
                                 omega_factor=spec.omega_factor))
                accuracy, _ = partition_accuracy(result.partition, truth)
            elif algorithm == "sc":
                if graph.n > spec.sc_max_n or graph.n > DENSE_EIGENSOLVE_BUDGET:
                    success = False
                    note = f"skipped: n={graph.n} above the dense budget"
                else:
                    part, elapsed = _timed(
                        lambda: spectral_clustering(graph, params.k, seed=seed))
                    accuracy, _ = partition_accuracy(part, truth)
        except (GraphError, PursuitError) as exc:
            success = False
            note = f"{type(exc).__name__}: {exc}"
        records.append(ExperimentRecord(
            kind=spec.kind, grid_index=grid_index, params=dict(resolved),
            trial=trial, seed=seed, algorithm=algorithm,
            misclassification=misclass, accuracy=accuracy,
            wall_time_s=elapsed, success=success, note=note,
        ))
    return records


def _sbm_params(spec, n, k, q, sizes=None):
    p, q_default = _resolve_pq(spec, n)
    return SbmParams(n=n, k=k, p=p, q=q if q is not None else q_default,
                     sizes=sizes)


def _noise_task(args):
    spec, grid_index, trial, q = args
    n, k = spec.n, spec.k
    params = _sbm_params(spec, n, k, q, sizes=spec.sizes)
    n0 = int(params.block_sizes()[0])
    resolved = {"n": n, "k": k, "p": params.p, "q": q,
                "Q": q * (n - n0)}
    return _run_algorithms(spec, params, grid_index, trial, resolved)


def _recovery_task(args):
    spec, grid_index, trial = args
    params = _sbm_params(spec, spec.n, spec.k, spec.q, sizes=spec.sizes)
    resolved = {"n": spec.n, "k": spec.k, "p": params.p, "q": params.q}
    return _run_algorithms(spec, params, grid_index, trial, resolved)


def _scaling_point(spec, n):
    if spec.regime == "fixed-n0":
        if not spec.n0:
            raise BenchError("fixed-n0 scaling needs n0")
        k = max(2, round(n / spec.n0))
        n0 = spec.n0
    elif spec.regime == "fixed-k":
        if not spec.k:
            raise BenchError("fixed-k scaling needs k")
        k = spec.k
        n0 = max(2, n // k)
    else:  # sqrt
        k = max(2, round(math.sqrt(n)))
        n0 = k
    return k * n0, k, n0


def _scaling_task(args):
    spec, grid_index, trial, n_requested = args
    n, k, n0 = _scaling_point(spec, n_requested)
    params = _sbm_params(spec, n, k, None)
    resolved = {"n": n, "k": k, "n0": n0, "p": params.p, "q": params.q}
    return _run_algorithms(spec, params, grid_index, trial, resolved)


def _cocluster_task(args):
    spec, grid_index, trial = args
    if not (spec.rows and spec.cols and spec.k):
        raise BenchError("cocluster benches need rows, cols and k")
    seed = stream_seed(spec.master_seed, grid_index, trial)
    rng = np.random.default_rng(seed)
    rows, cols, k = spec.rows, spec.cols, spec.k
    if rows % k or cols % k:
        raise BenchError("rows and cols must be divisible by k")
    row_truth = np.repeat(np.arange(k), rows // k)
    col_truth = np.repeat(np.arange(k), cols // k)
    matrix = (row_truth[:, None] == col_truth[None, :]).astype(np.float64)
    row_perm = rng.permutation(rows)
    col_perm = rng.permutation(cols)
    matrix = matrix[row_perm][:, col_perm]
    resolved = {"rows": rows, "cols": cols, "k": k}
    misclass = None
    accuracy = None
    success = True
    note = ""
    elapsed = float("nan")
    try:
        result, elapsed = _timed(lambda: cocluster(
            matrix, n0x_hat=spec.n0_hat or rows // k, k=k,
            omega_factor=spec.omega_factor))
        row_acc, _ = partition_accuracy(
            result.row_partition, Partition(row_truth[row_perm], k))
        col_acc, _ = partition_accuracy(
            result.col_partition, Partition(col_truth[col_perm], k))
        accuracy = min(row_acc, col_acc)
    except (GraphError, PursuitError) as exc:
        success = False
        note = f"{type(exc).__name__}: {exc}"
    return [ExperimentRecord(
        kind=spec.kind, grid_index=grid_index, params=resolved, trial=trial,
        seed=seed, algorithm="cocluster", misclassification=misclass,
        accuracy=accuracy, wall_time_s=elapsed, success=success, note=note,
    )]


def _run_tasks(task_fn, tasks, workers):
    if workers <= 1:
        chunks = [task_fn(task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(task_fn, tasks))
    records = [rec for chunk in chunks for rec in chunk]
    records.sort(key=lambda r: (r.grid_index, r.trial, r.algorithm))
    return records


@dataclass
class SweepResult:
    records: list
    table: list  # rows of the kind's primary CSV
    header: tuple
    slopes: dict = field(default_factory=dict)


def run_noise_sweep(spec: ExperimentSpec) -> SweepResult:
    """Mean SCP misclassification across a grid of inter-cluster noise.

    The grid is ``q_grid`` (raw probabilities) or ``Q_grid`` (expected
    out-of-community degree, q = Q / (n - n0)); each point averages
    ``trials`` independent graphs.
    """
    if spec.n is None or spec.k is None:
        raise BenchError("noise sweeps need n and k")
    sizes = SbmParams(n=spec.n, k=spec.k, p=1.0, q=0.0,
                      sizes=spec.sizes).block_sizes()
    n0 = int(sizes[0])
    if spec.q_grid is not None:
        q_values = [float(q) for q in spec.q_grid]
    elif spec.Q_grid is not None:
        q_values = [float(cap) / (spec.n - n0) for cap in spec.Q_grid]
    else:
        raise BenchError("noise sweeps need q_grid or Q_grid")
    tasks = [(spec, gi, t, q)
             for gi, q in enumerate(q_values) for t in range(spec.trials)]
    records = _run_tasks(_noise_task, tasks, spec.workers)
    table = []
    for gi, q in enumerate(q_values):
        vals = [r.misclassification for r in records
                if r.grid_index == gi and r.success
                and r.misclassification is not None]
        table.append((q * (spec.n - n0),
                      float(np.mean(vals)) if vals else float("nan"),
                      float(np.std(vals)) if vals else float("nan"),
                      len(vals)))
    return SweepResult(records=records, table=table,
                       header=("Q", "mean_misclass", "std", "trials"))


def run_recovery(spec: ExperimentSpec) -> SweepResult:
    """Per-trial recovery quality on one SBM configuration.

    SCP rows report single-cluster misclassification; ISCP and SC rows
    report full-partition accuracy under optimal label matching.
    """
    if spec.n is None or spec.k is None:
        raise BenchError("recovery runs need n and k")
    tasks = [(spec, 0, t) for t in range(spec.trials)]
    records = _run_tasks(_recovery_task, tasks, spec.workers)
    table = [(r.trial, r.seed, r.algorithm,
              "" if r.misclassification is None else repr(r.misclassification),
              "" if r.accuracy is None else repr(r.accuracy),
              repr(r.wall_time_s), r.success, r.note)
             for r in records]
    return SweepResult(records=records, table=table,
                       header=("trial", "seed", "algorithm",
                               "misclassification", "accuracy",
                               "wall_time_s", "success", "note"))


def run_cocluster(spec: ExperimentSpec) -> SweepResult:
    """Planted block-matrix co-clustering trials (exactness per trial)."""
    tasks = [(spec, 0, t) for t in range(spec.trials)]
    records = _run_tasks(_cocluster_task, tasks, spec.workers)
    table = [(r.trial, r.seed,
              "" if r.accuracy is None else repr(r.accuracy),
              repr(r.wall_time_s), r.success, r.note) for r in records]
    return SweepResult(records=records, table=table,
                       header=("trial", "seed", "accuracy", "wall_time_s",
                               "success", "note"))


def fit_loglog_slope(ns, times) -> float:
    """Least-squares slope of log(time) against log(n)."""
    ns = np.asarray(ns, dtype=np.float64)
    times = np.asarray(times, dtype=np.float64)
    ok = (ns > 0) & (times > 0)
    if ok.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(ns[ok]), np.log(times[ok]), 1)[0])


def run_scaling(spec: ExperimentSpec) -> SweepResult:
    """Median wall time per algorithm across a grid of graph sizes.

    The regime fixes n0, fixes k, or grows both like sqrt(n); requested n
    values are rounded to k * n0. Timing runs are forced single-threaded
    so the measurements stay clean; SC is skipped (with a note) above its
    dense budget.
    """
    if spec.n_grid is None:
        raise BenchError("scaling runs need n_grid")
    if spec.workers > 1:
        warnings.warn("scaling benches run single-threaded for clean timings",
                      RuntimeWarning)
    tasks = [(spec, gi, t, n)
             for gi, n in enumerate(spec.n_grid) for t in range(spec.trials)]
    records = _run_tasks(_scaling_task, tasks, workers=1)
    table = []
    slopes = {}
    for algorithm in spec.algorithms:
        ns, medians = [], []
        for gi, n_req in enumerate(spec.n_grid):
            recs = [r for r in records
                    if r.grid_index == gi and r.algorithm == algorithm]
            if not recs:
                continue
            n_resolved = recs[0].params["n"]
            ran = [r.wall_time_s for r in recs if r.success]
            note = "" if ran else recs[0].note
            median = float(np.median(ran)) if ran else float("nan")
            table.append((n_resolved, algorithm, median, len(ran), note))
            if ran:
                ns.append(n_resolved)
                medians.append(median)
        slopes[algorithm] = fit_loglog_slope(ns, medians)
    table.sort(key=lambda row: (row[0], row[1]))
    return SweepResult(records=records, table=table,
                       header=("n", "algorithm", "median_time_s", "trials",
                               "note"),
                       slopes=slopes)


def run_experiment(spec: ExperimentSpec) -> SweepResult:
    """Dispatch on the spec kind."""
    if spec.kind == "noise-sweep":
        return run_noise_sweep(spec)
    if spec.kind == "scaling":
        return run_scaling(spec)
    if spec.kind in ("recovery", "single-cluster", "full-partition"):
        return run_recovery(spec)
    if spec.kind == "cocluster":
        return run_cocluster(spec)
    raise BenchError(f"unhandled kind {spec.kind!r}")


def write_table_csv(result: SweepResult, path):
    """Primary CSV: stable order, repr-formatted floats (byte-reproducible
    except for any wall-time column)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(result.header)
        for row in result.table:
            writer.writerow([repr(x) if isinstance(x, float) else x
                             for x in row])


def write_records_csv(records: Sequence[ExperimentRecord], path):
    """Full per-trial record dump (replay metadata included)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("kind", "grid_index", "params", "trial", "seed",
                         "algorithm", "misclassification", "accuracy",
                         "wall_time_s", "success", "note"))
        for rec in records:
            row = asdict(rec)
            row["params"] = ";".join(f"{k}={v!r}"
                                     for k, v in sorted(row["params"].items()))
            writer.writerow([row[c] for c in (
                "kind", "grid_index", "params", "trial", "seed", "algorithm",
                "misclassification", "accuracy", "wall_time_s", "success",
                "note")])
