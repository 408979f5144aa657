"""Command-line interface: generators, pursuit runs, diagnostics, benchmarks."""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import bench as bench_mod
from . import io as io_mod
from .baselines import spectral_clustering
from .diagnostics import (chi_statistic, coherence, erc_check,
                          intra_inner_product_floor, perturbation_split,
                          recovery_regime, ric_bruteforce, ric_sampled)
from .generators import Partition, SbmParams, gen_sbm
from .graph import GraphError, LaplacianView, drop_isolated
from .pipeline import (degree_threshold, degree_threshold_iterated,
                       gaussian_affinity, knn_sparsify, misclassification,
                       partition_accuracy)
from .pursuit import (OMEGA_FACTOR_DEFAULT, ScpConfig, cocluster, iscp,
                      laplacian_operator, scp)


def _parse_sizes(text):
    return [int(s) for s in text.split(",") if s]


def _load_graph(path, drop_isolated_flag):
    graph = io_mod.read_edge_list(path)
    kept = np.arange(graph.n)
    if drop_isolated_flag and graph.isolated_vertices().size:
        graph, kept = drop_isolated(graph)
    return graph, kept


def _print_kv(pairs):
    for key, value in pairs:
        sys.stdout.write(f"{key}={value}\n")


def _add_graph_arguments(parser):
    parser.add_argument("--graph", required=True, help="edge-list file")
    parser.add_argument("--drop-isolated", action="store_true",
                        help="drop zero-degree vertices before running")


def _cmd_gen_sbm(args):
    sizes = tuple(_parse_sizes(args.sizes)) if args.sizes else None
    params = SbmParams(n=args.n, k=args.k, p=args.p, q=args.q, sizes=sizes)
    sample = gen_sbm(params, args.seed, permute=args.permute)
    io_mod.write_edge_list(sample.graph, args.out)
    if args.labels:
        io_mod.write_labels_csv(sample.partition, args.labels)
    isolated = sample.graph.isolated_vertices()
    _print_kv([
        ("n", sample.graph.n),
        ("edges", sample.graph.edge_count),
        ("isolated", isolated.size),
    ])
    return 0


def _cmd_scp(args):
    graph, kept = _load_graph(args.graph, args.drop_isolated)
    lap = LaplacianView(graph)
    positions = np.flatnonzero(kept == args.seed_vertex)
    if positions.size == 0:
        raise GraphError(f"seed vertex {args.seed_vertex} is not in the graph "
                         f"after preprocessing")
    seed_local = int(positions[0])
    if args.n0_range:
        lo, hi, step = args.n0_range
        rows = []
        for n0 in range(lo, hi + 1, step):
            result = scp(lap, ScpConfig(seed_local, n0, args.omega_factor))
            rows.append((
                ("n0", n0),
                ("cluster_size", result.cluster.size),
                ("sp_residual", result.sp_result.residual_norm
                 if result.sp_result else float("nan")),
                ("converged", result.converged),
            ))
        for row in rows:
            _print_kv(row)
        return 0
    if args.n0 is None:
        raise GraphError("set --n0 (or --n0-range for a sweep)")
    result = scp(lap, ScpConfig(seed_local, args.n0, args.omega_factor))
    cluster = kept[result.cluster]
    if args.out:
        io_mod.write_cluster_csv(cluster, args.out)
    _print_kv([
        ("cluster_size", cluster.size),
        ("omega_size", result.omega.size),
        ("lambda_size", result.lambda_sharp.size),
        ("converged", result.converged),
        ("total_s", f"{result.timings['total_s']:.6f}"),
    ])
    return 0


def _parse_n0_range(text):
    parts = [int(x) for x in text.split(":")]
    if len(parts) == 2:
        parts.append(1)
    if len(parts) != 3 or parts[0] < 2 or parts[1] < parts[0] or parts[2] < 1:
        raise argparse.ArgumentTypeError(
            "expected LO:HI[:STEP] with 2 <= LO <= HI"
        )
    return parts


def _cmd_iscp(args):
    graph, kept = _load_graph(args.graph, args.drop_isolated)
    lap = LaplacianView(graph)
    schedule = _parse_sizes(args.sizes) if "," in args.sizes else int(args.sizes)
    result = iscp(lap, schedule, omega_factor=args.omega_factor)
    io_mod.write_labels_csv(result.partition, args.out, vertex_ids=kept)
    _print_kv([
        ("clusters", result.partition.k),
        ("rejected", result.rejected.size),
        ("sizes", ",".join(str(s) for s in result.partition.sizes())),
    ])
    return 0


def _cmd_cocluster(args):
    matrix = io_mod.read_matrix_csv(args.matrix)
    result = cocluster(matrix, n0x_hat=args.n0x, k=args.k,
                       omega_factor=args.omega_factor)
    io_mod.write_labels_csv(result.row_partition, args.out_rows)
    io_mod.write_labels_csv(result.col_partition, args.out_cols)
    _print_kv([
        ("row_sizes", ",".join(str(s) for s in result.row_partition.sizes())),
        ("col_sizes", ",".join(str(s) for s in result.col_partition.sizes())),
    ])
    return 0


def _cmd_sc(args):
    graph, kept = _load_graph(args.graph, args.drop_isolated)
    part = spectral_clustering(graph, args.k, seed=args.seed)
    io_mod.write_labels_csv(part, args.out, vertex_ids=kept)
    _print_kv([
        ("clusters", part.k),
        ("sizes", ",".join(str(s) for s in part.sizes())),
    ])
    return 0


def _cmd_diag(args):
    graph, _ = _load_graph(args.graph, args.drop_isolated) if args.graph \
        else (None, None)
    labels = None
    if args.labels:
        labels = io_mod.read_labels_csv(args.labels,
                                        n=graph.n if graph else None)
    mode = args.mode
    if mode == "regime":
        report = recovery_regime(args.k, args.P, args.Q)
        _print_kv([("value", repr(report.value)),
                   ("solvable_hint", report.solvable_hint)])
        return 0
    if graph is None:
        raise GraphError(f"diag {mode} needs --graph")
    if mode == "ric":
        op = laplacian_operator(LaplacianView(graph))
        if args.trials:
            report = ric_sampled(op, args.s, args.trials, seed=args.seed)
        else:
            report = ric_bruteforce(op, args.s)
        _print_kv([
            ("s", report.s),
            ("delta_s", repr(report.delta_s)),
            ("method", report.method),
            ("worst_set", ",".join(str(i) for i in report.worst_set)),
        ])
    elif mode == "coherence":
        op = laplacian_operator(LaplacianView(graph))
        normalized, raw = coherence(op)
        _print_kv([("mu_normalized", repr(normalized)),
                   ("max_abs_gram_offdiag", repr(raw))])
    elif mode == "chi":
        value = chi_statistic(graph, args.i, args.j)
        _print_kv([("chi", repr(value))])
    elif mode == "erc":
        op = laplacian_operator(LaplacianView(graph))
        support = np.asarray(_parse_sizes(args.support), dtype=np.int64)
        if args.drop_column is not None:
            # the exact-recovery condition of the theory applies to the
            # Laplacian with the seed's column removed
            others = np.delete(np.arange(graph.n), args.drop_column)
            op = op.restrict(others)
            support = np.searchsorted(others, support)
        report = erc_check(op, support)
        _print_kv([
            ("value", repr(report.value)),
            ("passes", report.passes),
            ("min_singular_value", repr(report.min_singular_value)),
        ])
    elif mode == "perturbation":
        if labels is None:
            raise GraphError("diag perturbation needs --labels")
        report = perturbation_split(graph, labels)
        _print_kv([
            ("max_noise_ratio", repr(report.max_noise_ratio)),
            ("e1_inf", repr(report.e1_inf)),
            ("e2_inf", repr(report.e2_inf)),
            ("e1_bound_ok", report.e1_bound_ok),
            ("e2_bound_ok", report.e2_bound_ok),
        ])
    elif mode == "floor":
        if labels is None:
            raise GraphError("diag floor needs --labels")
        stats = intra_inner_product_floor(LaplacianView(graph), labels,
                                          sample_pairs=args.trials or 100,
                                          seed=args.seed)
        _print_kv([
            ("n_pairs", stats.n_pairs),
            ("min_abs", repr(stats.min_abs)),
            ("mean_abs", repr(stats.mean_abs)),
            ("fraction_above_floor", repr(stats.fraction_above_floor)),
        ])
    else:
        raise GraphError(f"unknown diag mode {mode!r}")
    return 0


def _cmd_knn_graph(args):
    points = io_mod.read_points_csv(args.points)
    affinity = gaussian_affinity(points, args.sigma)
    graph = knn_sparsify(affinity, args.k)
    io_mod.write_edge_list(graph, args.out)
    _print_kv([("n", graph.n), ("edges", graph.edge_count)])
    return 0


def _cmd_threshold(args):
    graph = io_mod.read_edge_list(args.graph)
    fn = degree_threshold_iterated if args.iterate else degree_threshold
    result = fn(graph, args.dmin)
    io_mod.write_edge_list(result.graph, args.out)
    if args.map:
        with open(args.map, "w") as fh:
            for new, old in enumerate(result.kept):
                fh.write(f"{old},{new}\n")
    _print_kv([
        ("kept", result.kept.size),
        ("dropped", graph.n - result.kept.size),
        ("second_pass_would_drop", result.second_pass_would_drop),
    ])
    return 0


def _cmd_score(args):
    with open(args.found) as fh:
        first = fh.readline()
    if "," in first:
        found = io_mod.read_labels_csv(args.found)
        truth = io_mod.read_labels_csv(args.truth, n=found.n)
        accuracy, confusion = partition_accuracy(found, truth)
        _print_kv([("accuracy", repr(accuracy)),
                   ("confusion", ";".join(",".join(str(x) for x in row)
                                          for row in confusion))])
    else:
        found = io_mod.read_cluster_csv(args.found)
        truth = io_mod.read_cluster_csv(args.truth)
        _print_kv([("misclassification",
                    repr(misclassification(found, truth)))])
    return 0


def _cmd_bench(args):
    spec = bench_mod.load_spec(args.config)
    aliases = {"recovery": ("recovery", "single-cluster", "full-partition")}
    allowed = aliases.get(args.mode, (args.mode,))
    if spec.kind not in allowed:
        raise GraphError(
            f"config kind {spec.kind!r} does not match bench mode {args.mode!r}"
        )
    result = bench_mod.run_experiment(spec)
    bench_mod.write_table_csv(result, args.out)
    if args.records:
        bench_mod.write_records_csv(result.records, args.records)
    for algorithm, slope in result.slopes.items():
        _print_kv([(f"slope_{algorithm}", repr(slope))])
    _print_kv([("records", len(result.records)), ("out", args.out)])
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="scpursuit",
        description="Graph community detection by single cluster pursuit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-sbm", help="sample a stochastic block model graph")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--sizes", help="comma-separated block sizes")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--labels")
    p.add_argument("--permute", action="store_true")
    p.set_defaults(fn=_cmd_gen_sbm)

    p = sub.add_parser("scp", help="recover one cluster from a seed vertex")
    _add_graph_arguments(p)
    p.add_argument("--seed-vertex", type=int, required=True)
    p.add_argument("--n0", type=int)
    p.add_argument("--n0-range", type=_parse_n0_range,
                   help="LO:HI[:STEP] sweep over cluster-size estimates")
    p.add_argument("--omega-factor", type=float, default=OMEGA_FACTOR_DEFAULT)
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_scp)

    p = sub.add_parser("iscp", help="partition the whole graph")
    _add_graph_arguments(p)
    p.add_argument("--sizes", required=True,
                   help="single size estimate or comma-separated schedule")
    p.add_argument("--omega-factor", type=float, default=OMEGA_FACTOR_DEFAULT)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_iscp)

    p = sub.add_parser("cocluster", help="co-cluster a nonnegative matrix")
    p.add_argument("--matrix", required=True, help="CSV matrix file")
    p.add_argument("--n0x", type=int, required=True,
                   help="estimated row-cluster size")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--omega-factor", type=float, default=OMEGA_FACTOR_DEFAULT)
    p.add_argument("--out-rows", required=True)
    p.add_argument("--out-cols", required=True)
    p.set_defaults(fn=_cmd_cocluster)

    p = sub.add_parser("sc", help="spectral clustering baseline")
    _add_graph_arguments(p)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_sc)

    p = sub.add_parser("diag", help="theory diagnostics")
    p.add_argument("mode", choices=["ric", "coherence", "chi", "regime",
                                    "erc", "perturbation", "floor"])
    p.add_argument("--graph")
    p.add_argument("--drop-isolated", action="store_true")
    p.add_argument("--labels")
    p.add_argument("--s", type=int, default=1, help="RIC order")
    p.add_argument("--trials", type=int, default=0,
                   help="sampled mode trial count (0 = exhaustive)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--i", type=int, default=0)
    p.add_argument("--j", type=int, default=1)
    p.add_argument("--support", default="",
                   help="comma-separated support for erc (vertex ids)")
    p.add_argument("--drop-column", type=int,
                   help="erc on the Laplacian with this column removed")
    p.add_argument("--k", type=int, default=1, help="cluster count for regime")
    p.add_argument("--P", type=float, default=0.0)
    p.add_argument("--Q", type=float, default=0.0)
    p.set_defaults(fn=_cmd_diag)

    p = sub.add_parser("knn-graph", help="Gaussian affinity + k-NN graph")
    p.add_argument("--points", required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_knn_graph)

    p = sub.add_parser("threshold", help="drop low-degree vertices")
    p.add_argument("--graph", required=True)
    p.add_argument("--dmin", type=float, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--map", help="write old,new id pairs")
    p.add_argument("--iterate", action="store_true",
                   help="repeat to a fixpoint")
    p.set_defaults(fn=_cmd_threshold)

    p = sub.add_parser("score", help="score a recovery against ground truth")
    p.add_argument("--found", required=True)
    p.add_argument("--truth", required=True)
    p.set_defaults(fn=_cmd_score)

    p = sub.add_parser("bench", help="run a benchmark spec")
    p.add_argument("mode", choices=["noise-sweep", "scaling", "recovery",
                                    "cocluster"])
    p.add_argument("--config", required=True, help="TOML experiment spec")
    p.add_argument("--out", required=True)
    p.add_argument("--records", help="also dump per-trial records")
    p.set_defaults(fn=_cmd_bench)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (GraphError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
