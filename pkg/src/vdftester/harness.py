"""Batch experiments: grids of (instance, distribution, tester, eps) cells run
for a number of seeded trials, reported as CSV or JSON.

Config files are YAML (JSON is valid YAML too)::

    seed_base: 0          # default for cells that omit it
    jobs: 1
    record_timing: false  # wall_ms is left empty unless true, so reports are reproducible
    cells:
      - id: c5-uniform
        instance: {family: odd_cycle, size: 5}     # or  graph: path/to/file
        distribution: {kind: uniform}              # or  dist: path/to/file
        tester: bipartite
        eps: 0.3
        trials: 300
        seed_base: 1000
        params: {support_bound: 5}

Relative paths are resolved against the config file's directory.
"""
from __future__ import annotations

import csv
import io
import json
import math
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .cycle_tester import test_cycle_free
from .errors import ConfigError, VDFError
from .graph_core import BoundedDegreeGraph, InstanceFamily, generate_instance, read_graph
from .support_estimator import EstimatorParams, refined_estimate_state, rough_estimate
from .vertex_dist import OracleSession, VertexDistribution, read_distribution
from .walk_tester import test_bipartite, test_bipartite_with_bound

COLUMNS = ("cell_id", "trial", "decision", "sample_q", "eval_q", "graph_q", "wall_ms",
           "witness_len", "estimate_n")
AGGREGATE_COLUMNS = ("cell_id", "tester", "eps", "trials", "completed", "errors",
                     "rejection_rate", "median_queries", "p95_queries", "median_estimate_n",
                     "diagnostic")
TESTERS = ("bipartite", "bipartite_with_bound", "cycle_free", "estimate_rough", "estimate_refined")
ERROR = "error"
ESTIMATE = "estimate"

_INT_FIELDS = {"trial", "sample_q", "eval_q", "graph_q", "witness_len", "estimate_n", "trials",
               "completed", "errors", "p95_queries"}
_FLOAT_FIELDS = {"wall_ms", "eps", "rejection_rate", "median_queries", "median_estimate_n"}


@dataclass(frozen=True)
class CellSpec:
    id: str
    tester: str
    eps: float
    trials: int
    seed_base: int
    instance: dict | None = None
    graph_path: str | None = None
    distribution: dict | None = None
    dist_path: str | None = None
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ExperimentConfig:
    cells: tuple[CellSpec, ...]
    jobs: int = 1
    record_timing: bool = False
    out_dir: str | None = None

    @classmethod
    def from_mapping(cls, data, base_dir: Path | None = None) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a mapping")
        unknown = set(data) - {"cells", "jobs", "record_timing", "seed_base", "out"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        raw_cells = data.get("cells")
        if not isinstance(raw_cells, list) or not raw_cells:
            raise ConfigError("config needs a non-empty 'cells' list")
        default_seed = data.get("seed_base", 0)
        cells = []
        seen = set()
        for k, raw in enumerate(raw_cells):
            cell = _parse_cell(raw, k, default_seed, base_dir)
            if cell.id in seen:
                raise ConfigError(f"duplicate cell id {cell.id!r}")
            seen.add(cell.id)
            cells.append(cell)
        jobs = data.get("jobs", 1)
        if not isinstance(jobs, int) or jobs < 1:
            raise ConfigError("jobs must be a positive integer")
        out = data.get("out")
        if out is not None and base_dir is not None:
            out = str(base_dir / out)
        return cls(tuple(cells), jobs, bool(data.get("record_timing", False)), out)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"config {path} is not valid YAML: {exc}") from exc
        return cls.from_mapping(data, path.parent)


def _parse_cell(raw, k: int, default_seed, base_dir: Path | None) -> CellSpec:
    if not isinstance(raw, dict):
        raise ConfigError(f"cell {k} must be a mapping")
    cid = str(raw.get("id", f"cell{k}"))
    tester = raw.get("tester")
    if tester not in TESTERS:
        raise ConfigError(f"cell {cid}: tester must be one of {TESTERS}, got {tester!r}")
    try:
        eps = float(raw["eps"])
    except (KeyError, TypeError, ValueError):
        raise ConfigError(f"cell {cid}: eps is required and must be a number") from None
    trials = raw.get("trials", 1)
    if not isinstance(trials, int) or trials < 1:
        raise ConfigError(f"cell {cid}: trials must be a positive integer")
    seed_base = raw.get("seed_base", default_seed)
    if not isinstance(seed_base, int) or seed_base < 0:
        raise ConfigError(f"cell {cid}: seed_base must be a non-negative integer")

    def resolve(p):
        if p is None:
            return None
        p = Path(p)
        return str(p if p.is_absolute() or base_dir is None else base_dir / p)

    instance, graph_path = raw.get("instance"), resolve(raw.get("graph"))
    distribution, dist_path = raw.get("distribution"), resolve(raw.get("dist"))
    if tester.startswith("estimate"):
        if instance is not None or graph_path is not None:
            raise ConfigError(f"cell {cid}: estimator cells take no graph")
    elif (instance is None) == (graph_path is None):
        raise ConfigError(f"cell {cid}: give exactly one of 'instance' or 'graph'")
    if (distribution is None) == (dist_path is None):
        raise ConfigError(f"cell {cid}: give exactly one of 'distribution' or 'dist'")
    params = raw.get("params", {}) or {}
    if not isinstance(params, dict):
        raise ConfigError(f"cell {cid}: params must be a mapping")
    return CellSpec(cid, tester, eps, trials, seed_base, instance, graph_path, distribution,
                    dist_path, dict(params))


# -- building cell inputs --------------------------------------------------------------

def _build_graph(cell: CellSpec) -> BoundedDegreeGraph | None:
    if cell.graph_path is not None:
        return read_graph(cell.graph_path)
    if cell.instance is None:
        return None
    spec = dict(cell.instance)
    if "edges" in spec:
        spec["edges"] = tuple(tuple(e) for e in spec["edges"])
    try:
        return generate_instance(InstanceFamily(**spec))
    except TypeError as exc:
        raise ConfigError(f"bad instance spec {cell.instance}: {exc}") from exc


def build_distribution(spec: dict, vertex_count: int | None) -> VertexDistribution:
    """Distribution from a config mapping: kind uniform | zipf | point_mass | weights."""
    spec = dict(spec)
    kind = spec.pop("kind", None)
    n = spec.pop("vertex_count", vertex_count)
    if kind == "uniform":
        support = spec.pop("support", None)
        if n is None:
            raise ConfigError("uniform distribution needs vertex_count")
        dist = VertexDistribution.uniform(n, support)
    elif kind == "zipf":
        atoms = spec.pop("atoms", n)
        s = spec.pop("s", 1.0)
        shuffle = spec.pop("shuffle_seed", None)
        order = None
        if shuffle is not None:
            order = (np.random.default_rng(shuffle).permutation(n or atoms) + 1).tolist()
        dist = VertexDistribution.zipf(atoms, s, n, order)
    elif kind == "point_mass":
        dist = VertexDistribution.point_mass(spec.pop("vertex"), n)
    elif kind == "weights":
        weights = {int(v): float(w) for v, w in spec.pop("weights").items()}
        dist = VertexDistribution.from_weights(weights, n)
    else:
        raise ConfigError(f"unknown distribution kind {kind!r}")
    if spec:
        raise ConfigError(f"unknown distribution keys {sorted(spec)}")
    return dist


def _build_dist(cell: CellSpec, graph: BoundedDegreeGraph | None) -> VertexDistribution:
    n = graph.vertex_count if graph is not None else None
    if cell.dist_path is not None:
        return read_distribution(cell.dist_path, n)
    return build_distribution(cell.distribution, n)


# -- running -------------------------------------------------------------------------------

def _row(cell_id, trial, decision, sample_q=None, eval_q=None, graph_q=None, wall_ms=None,
         witness_len=None, estimate_n=None) -> dict:
    return dict(zip(COLUMNS, (cell_id, trial, decision, sample_q, eval_q, graph_q, wall_ms,
                              witness_len, estimate_n)))


def run_trial(cell: CellSpec, graph, dist, trial: int, record_timing: bool = False) -> dict:
    seed = cell.seed_base + trial
    p = cell.params
    t0 = time.perf_counter()
    if cell.tester.startswith("estimate"):
        session = OracleSession(dist, seed=seed)
        if cell.tester == "estimate_rough":
            est = rough_estimate(session, cell.eps, params=EstimatorParams(cell.eps))
        else:
            est = refined_estimate_state(session, cell.eps, p.get("beta", 1.5)).estimate
        wall = (time.perf_counter() - t0) * 1e3
        return _row(cell.id, trial, ESTIMATE, session.sample_queries, session.eval_queries, 0,
                    round(wall, 3) if record_timing else None, None, est)
    if cell.tester == "bipartite":
        v = test_bipartite(graph, dist, cell.eps, seed)
    elif cell.tester == "bipartite_with_bound":
        if "support_bound" not in p:
            raise ConfigError("bipartite_with_bound needs params.support_bound")
        v = test_bipartite_with_bound(graph, dist, cell.eps, int(p["support_bound"]), seed)
    else:
        v = test_cycle_free(graph, dist, cell.eps, seed, kappa=p.get("kappa", 1 / 8),
                            repetitions=p.get("repetitions", 4),
                            support_bound=p.get("support_bound"))
    wall = (time.perf_counter() - t0) * 1e3
    return _row(cell.id, trial, v.decision, v.sample_queries, v.raw_eval_queries,
                v.raw_graph_queries, round(wall, 3) if record_timing else None, v.witness_len,
                v.support_bound)


def _error_row(cell: CellSpec, trial: int, exc: BaseException) -> tuple[dict, str]:
    return _row(cell.id, trial, ERROR), f"{type(exc).__name__}: {exc}"


def _run_cell(cell: CellSpec, record_timing: bool) -> tuple[list[dict], list[str]]:
    rows, diags = [], []
    try:
        graph = _build_graph(cell)
        dist = _build_dist(cell, graph)
    except (VDFError, OSError, ValueError, KeyError, TypeError) as exc:
        diag = f"{type(exc).__name__}: {exc}"
        return [_row(cell.id, t, ERROR) for t in range(cell.trials)], [diag]
    for t in range(cell.trials):
        try:
            rows.append(run_trial(cell, graph, dist, t, record_timing))
        except Exception as exc:  # a failing trial becomes an error row
            row, diag = _error_row(cell, t, exc)
            rows.append(row)
            diags.append(f"trial {t}: {diag}")
    return rows, diags


def _run_cell_star(args):
    return _run_cell(*args)


@dataclass
class ExperimentReport:
    rows: list[dict] = field(default_factory=list)
    aggregates: list[dict] = field(default_factory=list)

    @property
    def error_count(self) -> int:
        return sum(1 for r in self.rows if r["decision"] == ERROR)

    @property
    def complete(self) -> bool:
        return self.error_count == 0

    def rows_for(self, cell_id: str) -> list[dict]:
        return [r for r in self.rows if r["cell_id"] == cell_id]

    def aggregate(self, cell_id: str) -> dict:
        for a in self.aggregates:
            if a["cell_id"] == cell_id:
                return a
        raise KeyError(cell_id)

    def to_dict(self) -> dict:
        return {"rows": [dict(r) for r in self.rows], "aggregates": [dict(a) for a in self.aggregates]}


def _nearest_rank(sorted_vals: list, q: float):
    k = max(1, math.ceil(q * len(sorted_vals)))
    return sorted_vals[k - 1]


def aggregate_rows(rows: list[dict], cell_id: str, tester: str, eps: float,
                   diagnostic: str = "") -> dict:
    """Per-cell summary; recomputable from the rows alone (plus cell metadata)."""
    done = [r for r in rows if r["decision"] != ERROR]
    tests = [r for r in done if r["decision"] != ESTIMATE]
    queries = sorted(r["sample_q"] + r["eval_q"] + r["graph_q"] for r in done)
    estimates = [r["estimate_n"] for r in done if r["estimate_n"] is not None]
    return {
        "cell_id": cell_id, "tester": tester, "eps": eps, "trials": len(rows),
        "completed": len(done), "errors": len(rows) - len(done),
        "rejection_rate": (sum(r["decision"] == "reject" for r in tests) / len(tests)) if tests else None,
        "median_queries": float(statistics.median(queries)) if queries else None,
        "p95_queries": _nearest_rank(queries, 0.95) if queries else None,
        "median_estimate_n": float(statistics.median(estimates)) if estimates else None,
        "diagnostic": diagnostic,
    }


def check_aggregates(report: ExperimentReport) -> None:
    """Raise AssertionError unless every aggregate matches recomputation from rows."""
    for agg in report.aggregates:
        fresh = aggregate_rows(report.rows_for(agg["cell_id"]), agg["cell_id"], agg["tester"],
                               agg["eps"], agg["diagnostic"])
        if fresh != agg:
            raise AssertionError(f"aggregates for {agg['cell_id']} do not match the rows")


def run_experiment(config: ExperimentConfig, jobs: int | None = None) -> ExperimentReport:
    jobs = jobs or config.jobs
    work = [(cell, config.record_timing) for cell in config.cells]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_cell_star, work))  # map keeps cell order
    else:
        results = [_run_cell(*w) for w in work]
    report = ExperimentReport()
    for cell, (rows, diags) in zip(config.cells, results):
        report.rows.extend(rows)
        report.aggregates.append(aggregate_rows(rows, cell.id, cell.tester, cell.eps,
                                                "; ".join(diags)))
    check_aggregates(report)
    return report


# -- serialization ----------------------------------------------------------------------

def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse(name: str, text: str):
    if text == "":
        return "" if name == "diagnostic" else None
    if name in _INT_FIELDS:
        return int(text)
    if name in _FLOAT_FIELDS:
        return float(text)
    return text


def emit_report(report: ExperimentReport, fmt: str = "csv") -> str:
    if fmt == "json":
        return json.dumps(report.to_dict(), indent=2, sort_keys=False) + "\n"
    if fmt != "csv":
        raise ValueError(f"format must be csv or json, got {fmt!r}")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in report.rows:
        w.writerow([_fmt(r[c]) for c in COLUMNS])
    if report.aggregates:
        buf.write("\n# aggregates\n")
        w.writerow(AGGREGATE_COLUMNS)
        for a in report.aggregates:
            w.writerow([_fmt(a[c]) for c in AGGREGATE_COLUMNS])
    return buf.getvalue()


def parse_report(text: str, fmt: str = "csv") -> ExperimentReport:
    if fmt == "json":
        data = json.loads(text)
        return ExperimentReport(data["rows"], data["aggregates"])
    head, _, tail = text.partition("\n# aggregates\n")
    rows = [{k: _parse(k, v) for k, v in rec.items()}
            for rec in csv.DictReader(io.StringIO(head.rstrip("\n") + "\n"))]
    aggs = [{k: _parse(k, v) for k, v in rec.items()} for rec in csv.DictReader(io.StringIO(tail))]
    return ExperimentReport(rows, aggs)


def write_report(report: ExperimentReport, out_dir) -> tuple[Path, Path]:
    check_aggregates(report)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path, json_path = out / "report.csv", out / "report.json"
    csv_path.write_text(emit_report(report, "csv"), encoding="utf-8")
    json_path.write_text(emit_report(report, "json"), encoding="utf-8")
    return csv_path, json_path

