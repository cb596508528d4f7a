"""Command-line entry point ``vdf-tester``."""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from .cycle_tester import test_cycle_free
from .errors import ConfigError, ParseError, UsageError, VDFError
from .graph_core import BoundedDegreeGraph, canonical_edge, read_graph
from .harness import ExperimentConfig, run_experiment, write_report
from .support_estimator import EstimatorParams, refined_estimate_state, rough_estimate
from .truth_oracle import bipartite_distance, cyclefree_distance, gen2col_distance
from .vertex_dist import OracleSession, read_distribution
from .walk_tester import Verdict, test_bipartite, test_bipartite_with_bound

SUMMARY_COLUMNS = ("trial", "decision", "sample_q", "eval_q", "graph_q", "witness_len")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def load_labels(path, graph: BoundedDegreeGraph) -> dict[tuple[int, int], str]:
    """Label file: one ``u v eq|neq`` line per edge; '#' starts a comment."""
    labels = {}
    text = Path(path).read_text(encoding="ascii")
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3 or parts[2] not in ("eq", "neq"):
            raise ParseError(lineno, f"expected 'u v eq|neq', got {line!r}")
        try:
            e = canonical_edge(int(parts[0]), int(parts[1]))
        except ValueError:
            raise ParseError(lineno, f"bad vertex id in {line!r}") from None
        labels[e] = parts[2]
    missing = [e for e in graph.edges() if e not in labels]
    if missing:
        raise UsageError(f"label file misses {len(missing)} edges, first {missing[0]}")
    return labels


def _verdict_json(trial: int, seed: int, v: Verdict, timing: bool) -> str:
    d = v.to_dict()
    if d["params"] is not None:
        d["params"] = dict(d["params"])
    if not timing:
        d["wall_ms"] = None
    return json.dumps({"trial": trial, "seed": seed, **d}, sort_keys=True)


def _summary_csv(rows: list[tuple]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_COLUMNS)
    w.writerows(rows)
    return buf.getvalue()


def _run_trials(args, tester) -> int:
    graph = read_graph(args.graph)
    dist = read_distribution(args.dist, graph.vertex_count)
    out = []
    rows = []
    for t in range(args.trials):
        seed = args.seed + t
        v = tester(graph, dist, seed)
        out.append(_verdict_json(t, seed, v, args.record_timing))
        rows.append((t, v.decision, v.sample_queries, v.raw_eval_queries, v.raw_graph_queries,
                     v.witness_len))
    sys.stdout.write("\n".join(out) + "\n")
    sys.stdout.write(_summary_csv(rows))
    return EXIT_OK


def cmd_test_bipartite(args) -> int:
    if args.support_bound is not None:
        return _run_trials(args, lambda g, d, s: test_bipartite_with_bound(
            g, d, args.eps, args.support_bound, s))
    return _run_trials(args, lambda g, d, s: test_bipartite(g, d, args.eps, s))


def cmd_test_cycle_free(args) -> int:
    return _run_trials(args, lambda g, d, s: test_cycle_free(
        g, d, args.eps, s, kappa=args.kappa, repetitions=args.reps,
        support_bound=args.support_bound))


def cmd_estimate_support(args) -> int:
    dist = read_distribution(args.dist)
    session = OracleSession(dist, seed=args.seed)
    result = {"mode": args.mode, "eta": args.eta, "seed": args.seed}
    if args.mode == "rough":
        result["estimate"] = rough_estimate(session, args.eta, params=EstimatorParams(args.eta))
        result["beta"] = None
    else:
        st = refined_estimate_state(session, args.eta, args.beta)
        result.update(estimate=st.estimate, beta=args.beta, rough=st.rough,
                      iterations=st.iterations, ell=st.ell, disposed=st.disposed)
    result.update(sample_queries=session.sample_queries, eval_queries=session.eval_queries,
                  queries=session.sample_queries + session.eval_queries)
    print(json.dumps(result, sort_keys=True))
    return EXIT_OK


def cmd_oracle(args) -> int:
    graph = read_graph(args.graph)
    dist = read_distribution(args.dist, graph.vertex_count)
    if args.property == "bipartite":
        rep = bipartite_distance(graph, dist)
    elif args.property == "cyclefree":
        rep = cyclefree_distance(graph, dist)
    else:
        if args.labels is None:
            raise UsageError("--property 2col needs --labels")
        rep = gen2col_distance(graph, load_labels(args.labels, graph), dist)
    print(json.dumps(rep.to_dict(), sort_keys=True))
    return EXIT_OK


def cmd_run(args) -> int:
    try:
        config = ExperimentConfig.load(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = args.out or config.out_dir
    if out is None:
        print("config error: no output directory (--out)", file=sys.stderr)
        return EXIT_CONFIG
    report = run_experiment(config, args.jobs)
    csv_path, _ = write_report(report, out)
    for agg in report.aggregates:
        if agg["errors"]:
            print(f"cell {agg['cell_id']}: {agg['errors']} error rows: {agg['diagnostic']}",
                  file=sys.stderr)
    print(csv_path)
    return EXIT_OK if report.complete else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vdf-tester",
                                description="Distribution-free bipartiteness and cycle-freeness testers.")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("estimate-support", help="estimate the effective support size of D")
    e.add_argument("--dist", required=True)
    e.add_argument("--eta", type=float, required=True)
    e.add_argument("--beta", type=float, default=1.5)
    e.add_argument("--seed", type=int, required=True)
    e.add_argument("--mode", choices=("rough", "refined"), default="refined")
    e.set_defaults(func=cmd_estimate_support)

    def trial_args(sp):
        sp.add_argument("--graph", required=True)
        sp.add_argument("--dist", required=True)
        sp.add_argument("--eps", type=float, required=True)
        sp.add_argument("--seed", type=int, required=True)
        sp.add_argument("--trials", type=int, default=1)
        sp.add_argument("--support-bound", type=int, default=None)
        sp.add_argument("--record-timing", action="store_true",
                        help="include wall_ms (makes output run-dependent)")

    b = sub.add_parser("test-bipartite", help="run the bipartiteness tester")
    trial_args(b)
    b.set_defaults(func=cmd_test_bipartite)

    c = sub.add_parser("test-cycle-free", help="run the cycle-freeness tester")
    trial_args(c)
    c.add_argument("--kappa", type=float, default=1 / 8)
    c.add_argument("--reps", type=int, default=4)
    c.set_defaults(func=cmd_test_cycle_free)

    o = sub.add_parser("oracle", help="exact distance of a small instance")
    o.add_argument("--graph", required=True)
    o.add_argument("--dist", required=True)
    o.add_argument("--property", choices=("bipartite", "2col", "cyclefree"), required=True)
    o.add_argument("--labels", default=None)
    o.set_defaults(func=cmd_oracle)

    r = sub.add_parser("run", help="run a batch experiment from a config file")
    r.add_argument("--config", required=True)
    r.add_argument("--out", default=None)
    r.add_argument("--jobs", type=int, default=None)
    r.set_defaults(func=cmd_run)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "trials", 1) < 1:
        print("error: --trials must be positive", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except (VDFError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
