"""Bipartiteness and generalized 2-coloring testers driven by D-weighted random walks.

A run trims D to atoms above eps/(4n), picks start vertices with probability
proportional to the D-weight of their incident edges, launches many short
walks from each one, and rejects iff the union of traversed edges violates
the parity constraints (odd cycle for plain bipartiteness).

The walk phase runs in a compiled kernel (see ``_kernels``); the functions
``sample_start_vertex`` and ``walk_step`` below are the same procedures in
plain Python, used for single-step experiments.
"""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Mapping

import numpy as np

from . import _kernels
from .errors import (DeadEnd, DegenerateDistribution, LocalityError, NoStartVertex,
                     RejectionCapExceeded, UsageError)
from .graph_core import BoundedDegreeGraph, ParityUnionFind, canonical_edge, check_parity_consistency
from .support_estimator import refined_estimate_state
from .vertex_dist import REJECTION_CAP, OracleSession, VertexDistribution

ACCEPT = "accept"
REJECT = "reject"

# test_bipartite: the support bound comes from the refined estimator at
# effectiveness eps/16 with this beta; beta^5 <= 4 keeps the estimate above
# the minimal eps/4-effective support size.
COMPOSITION_ETA_DIVISOR = 16
COMPOSITION_BETA = 1.3

ParityFn = Callable[[int, int], int]


@dataclass(frozen=True)
class Schedule:
    """starts = ceil(a/eps); walks = ceil(b*sqrt(n)*log2(n+2)/eps^c);
    length = ceil(e*(log2(n+2)/eps)^f). ``eps`` is the proximity the walks
    run at, i.e. already halved by trimming."""
    a: float = 2.0
    b: float = 1.0 / 16
    c: float = 1.0
    e: float = 1.0
    f: float = 1.0

    def params(self, eps: float, n: int) -> "WalkParams":
        lg = math.log2(n + 2)
        return WalkParams(
            starts=max(1, math.ceil(self.a / eps - 1e-9)),
            walks_per_start=max(1, math.ceil(self.b * math.sqrt(n) * lg / eps**self.c - 1e-9)),
            walk_length=max(1, math.ceil(self.e * (lg / eps) ** self.f - 1e-9)),
        )


DEFAULT_SCHEDULE = Schedule()
# The heavier schedule the walk analysis is usually stated with; available
# for experiments, far too slow for routine use.
CLASSIC_SCHEDULE = Schedule(a=8.0, b=4.0, c=2.0, e=1.0, f=4.0)


@dataclass(frozen=True)
class WalkParams:
    starts: int
    walks_per_start: int
    walk_length: int

    def __post_init__(self):
        if min(self.starts, self.walks_per_start, self.walk_length) < 1:
            raise UsageError("walk parameters must be positive")

    @classmethod
    def from_eps(cls, eps: float, n: int, schedule: Schedule = DEFAULT_SCHEDULE) -> "WalkParams":
        return schedule.params(eps, n)


@dataclass
class Verdict:
    decision: str
    witness: list[tuple[int, int, int]] | None = None
    sample_queries: int = 0
    eval_queries: int = 0
    graph_queries: int = 0
    raw_eval_queries: int = 0
    raw_graph_queries: int = 0
    support_bound: int | None = None
    params: WalkParams | None = None
    explored_edges: int = 0
    flags: tuple[str, ...] = ()
    wall_ms: float | None = field(default=None, compare=False)

    @property
    def rejected(self) -> bool:
        return self.decision == REJECT

    @property
    def accepted(self) -> bool:
        return self.decision == ACCEPT

    @property
    def total_queries(self) -> int:
        """Sample queries plus evaluation and incidence queries without memoization."""
        return self.sample_queries + self.raw_eval_queries + self.raw_graph_queries

    @property
    def witness_len(self) -> int:
        return len(self.witness) if self.witness else 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["witness"] = [list(e) for e in self.witness] if self.witness else None
        d["flags"] = list(self.flags)
        return d


def _normalize_labels(labels) -> ParityFn | None:
    """None means every edge is 'neq'. Accepts a callable returning eq/neq or 0/1,
    or a mapping from edges to labels."""
    if labels is None:
        return None
    if isinstance(labels, Mapping):
        table = {canonical_edge(*e): lab for e, lab in labels.items()}
        return lambda u, v: _parity(table[canonical_edge(u, v)])
    if hasattr(labels, "parity"):
        return labels.parity
    return lambda u, v: _parity(labels(u, v))


def _parity(label) -> int:
    if label in ("neq", 1, True):
        return 1
    if label in ("eq", 0, False):
        return 0
    raise UsageError(f"edge label must be eq/neq, got {label!r}")


class WalkOracle:
    """Trimmed, memoized access to D and g for one run.

    ``value(v)`` is D(v) if D(v) > threshold, else 0 (so it is proportional
    to the trimmed D' by an unknown constant that every decision cancels).
    Memoized answers cost one real query; ``raw_*`` count the queries a
    memo-free implementation would make.
    """

    def __init__(self, session: OracleSession, threshold: float = 0.0, cap: int = REJECTION_CAP):
        if session.graph is None:
            raise UsageError("walks need a session with a graph")
        self.session = session
        self.graph = session.graph
        self.d = session.graph.degree_bound
        self.threshold = threshold
        self.cap = cap
        n = session.vertex_count
        self._val = np.zeros(n + 1)
        self._have_val = np.zeros(n + 1, dtype=bool)
        self._rows = np.zeros((n + 1, self.d), dtype=np.int64)
        self._have_row = np.zeros(n + 1, dtype=bool)
        self._deg = np.zeros(n + 1, dtype=np.int64)
        self.raw_eval = 0
        self.raw_graph = 0
        # queries made before the walks (e.g. by the estimator) were never memoized
        self.base_eval = session.eval_queries
        self.base_graph = session.graph_queries

    @property
    def rng(self) -> np.random.Generator:
        return self.session.rng

    def values(self, vs: np.ndarray) -> np.ndarray:
        vs = np.asarray(vs, dtype=np.int64)
        new = np.unique(vs[~self._have_val[vs]])
        if new.size:
            x = self.session.evaluate_many(new)
            self._val[new] = np.where(x > self.threshold, x, 0.0)
            self._have_val[new] = True
        return self._val[vs]

    def value(self, v: int) -> float:
        self.raw_eval += 1
        if not self._have_val[v]:
            x = self.session.evaluate(v)
            self._val[v] = x if x > self.threshold else 0.0
            self._have_val[v] = True
        return float(self._val[v])

    def rows(self, vs: np.ndarray) -> np.ndarray:
        vs = np.asarray(vs, dtype=np.int64)
        new = np.unique(vs[~self._have_row[vs]])
        if new.size:
            r = self.session.neighbors_many(new)
            self._rows[new] = r
            self._deg[new] = np.count_nonzero(r, axis=1)
            self._have_row[new] = True
        return self._rows[vs]

    def degree(self, v: int) -> int:
        if not self._have_row[v]:
            self.rows(np.array([v]))
        self.raw_graph += min(int(self._deg[v]) + 1, self.d)
        return int(self._deg[v])

    def neighbors(self, v: int) -> np.ndarray:
        k = self.degree(v)
        return self._rows[v, :k]

    def sample(self) -> int:
        """One draw from D' by rejection from D."""
        for _ in range(self.cap):
            s = self.session.sample()
            if self.value(s) > 0:
                return s
        raise NoStartVertex(f"{self.cap} draws of D without a vertex above the trimming threshold")


def sample_start_vertex(oracle: WalkOracle, max_trials: int | None = None) -> int:
    """Return v with probability proportional to sum over u in Γ(v) of D'(v)+D'(u)."""
    d = oracle.d
    rng = oracle.rng
    trials = max_trials if max_trials is not None else 10**4
    for _ in range(trials):
        s = oracle.sample()
        nb = oracle.neighbors(s)
        r = rng.random() * 2 * d
        k = nb.size
        if r < k:
            return s
        if r < 2 * k:
            return int(nb[int(r) - k])
    raise NoStartVertex(f"{trials} start-vertex trials produced no vertex")


def _step_weights(oracle: WalkOracle, v: int) -> tuple[np.ndarray, np.ndarray]:
    nb = oracle.neighbors(v)
    if nb.size == 0:
        raise DeadEnd(f"vertex {v} has no neighbors")
    oracle.raw_eval += nb.size
    # same accumulation order as the compiled engine, hence identical floats
    cw = np.cumsum(oracle.values(nb) + oracle.values(np.array([v]))[0])
    if cw[-1] <= 0:
        raise DeadEnd(f"every edge at vertex {v} has zero weight")
    return nb, cw


def walk_step(oracle: WalkOracle, v: int) -> int:
    """Move to u in Γ(v) with probability proportional to D'(v)+D'(u)."""
    nb, cw = _step_weights(oracle, v)
    return int(nb[_kernels.pick_many(oracle.rng, cw, 1)[0]])


def walk_steps(oracle: WalkOracle, v: int, count: int) -> np.ndarray:
    """``count`` independent steps from v (one neighborhood read)."""
    nb, cw = _step_weights(oracle, v)
    return nb[_kernels.pick_many(oracle.rng, cw, int(count))]


def _start_trial_cap(d: int, n: int, eta: float) -> int:
    # each trial succeeds w.p. >= eta/(n d) unless D' sits on isolated vertices
    return max(10**4, math.ceil(20 * d * n / eta))


@dataclass
class _RunState:
    """Memo shared by the repetitions of one run (answers do not depend on labels)."""
    session: OracleSession
    threshold: float
    have_row: np.ndarray
    deg: np.ndarray
    have_val: np.ndarray
    val: np.ndarray
    counters: np.ndarray

    @classmethod
    def open(cls, session: OracleSession, threshold: float) -> "_RunState":
        n1 = session.vertex_count + 1
        counters = np.zeros(5, dtype=np.int64)
        # queries made earlier (e.g. by the estimator) were never memoized
        counters[_kernels.SAMPLE] = session.sample_queries
        counters[_kernels.EVAL] = session.eval_queries
        counters[_kernels.GRAPH] = session.graph_queries
        counters[_kernels.RAW_EVAL] = session.eval_queries
        counters[_kernels.RAW_GRAPH] = session.graph_queries
        return cls(session, threshold, np.zeros(n1, dtype=bool), np.zeros(n1, dtype=np.int64),
                   np.zeros(n1, dtype=bool), np.zeros(n1), counters)

    def sync(self) -> None:
        s = self.session
        s.sample_queries = int(self.counters[_kernels.SAMPLE])
        s.eval_queries = int(self.counters[_kernels.EVAL])
        s.graph_queries = int(self.counters[_kernels.GRAPH])


@dataclass
class _Labels:
    mode: int = 0
    key: int = 0
    table: np.ndarray | None = None
    fn: ParityFn | None = None


_NO_TABLE = np.zeros((1, 1), dtype=np.int8)


def _label_spec(graph: BoundedDegreeGraph, labels) -> _Labels:
    if labels is None:
        return _Labels()
    if isinstance(labels, _Labels):
        return labels
    if hasattr(labels, "hash_key"):
        return _Labels(1, labels.hash_key, None, labels.parity)
    fn = _normalize_labels(labels)
    slots = graph.slot_array()
    table = np.zeros(slots.shape, dtype=np.int8)
    for v in graph.vertices():
        for j, u in enumerate(graph.neighbors(v)):
            table[v, j] = fn(v, u)
    return _Labels(2, 0, table, fn)


def _run_walks(state: _RunState, eps: float, n: int, labels: _Labels, schedule: Schedule,
               stop_when_closed: bool):
    """One repetition of the walk phase. Returns (decision, witness, params, edges, flags)."""
    session = state.session
    graph = session.graph
    dist = session.dist
    params = schedule.params(eps / 2, n)
    slots = graph.slot_array()
    atoms, prob, alias = dist.alias_tables()
    out = np.zeros(8, dtype=np.int64)
    tree = np.zeros((graph.vertex_count + 1, 3), dtype=np.int64)
    status = _kernels.run_walks(
        session.rng, slots, dist.probs, atoms, prob, alias, state.threshold,
        params.starts, params.walks_per_start, params.walk_length, stop_when_closed,
        _start_trial_cap(graph.degree_bound, n, eps / 4), REJECTION_CAP,
        labels.mode, np.uint64(labels.key), labels.table if labels.table is not None else _NO_TABLE,
        session.strict, session.revealed, state.have_row, state.deg, state.have_val, state.val,
        state.counters, out, tree)
    state.sync()
    if status == _kernels.ST_LOCALITY:
        raise LocalityError(f"query on vertex {int(out[6])} that no oracle answer revealed")
    if status == _kernels.ST_DRAW_CAP:
        raise RejectionCapExceeded(f"{REJECTION_CAP} draws without an atom above {state.threshold}")
    if status == _kernels.ST_NO_START:
        return ACCEPT, None, params, int(out[4]), ("no_start_vertex",)
    if status == _kernels.ST_REJECT:
        uf = ParityUnionFind()
        for a, b, lab in tree[:out[3]].tolist():
            uf.union(a, b, lab)
        witness = uf.witness(int(out[0]), int(out[1]), int(out[2]))
        return REJECT, witness, params, int(out[4]), ()
    return ACCEPT, None, params, int(out[4]), ("closed",) if out[5] else ()


def _session_for(graph: BoundedDegreeGraph, dist, seed) -> OracleSession:
    if isinstance(dist, OracleSession):
        if dist.graph is None:
            raise UsageError("the session has no graph")
        return dist
    if isinstance(dist, VertexDistribution):
        return OracleSession(dist, graph, seed)
    raise UsageError(f"expected a VertexDistribution or OracleSession, got {type(dist).__name__}")


def _check_eps(eps: float) -> None:
    if not 0 < eps < 1:
        raise UsageError(f"eps must lie in (0, 1), got {eps}")


def _validate_witness(witness, graph: BoundedDegreeGraph, parity: ParityFn | None) -> None:
    if not witness:
        raise AssertionError("rejection without a witness")
    for u, v, p in witness:
        if v not in graph.neighbors(u):
            raise AssertionError(f"witness edge ({u}, {v}) is not in the graph")
        if p != (1 if parity is None else parity(u, v)):
            raise AssertionError(f"witness edge ({u}, {v}) carries the wrong label")
    if check_parity_consistency(witness).consistent:
        raise AssertionError("witness is parity-consistent")


def run_with_bound(session: OracleSession, eps: float, n: int, *, labels=None,
                   labels_for_repetition: Callable[[int], object] | None = None,
                   schedule: Schedule = DEFAULT_SCHEDULE, stop_when_closed: bool = True,
                   repetitions: int = 1, started: float | None = None) -> Verdict:
    """Trim at eps/(4n), then run up to ``repetitions`` walk phases on ``session``,
    stopping at the first rejection. ``labels_for_repetition(r)`` supplies a fresh
    labeling per repetition; otherwise ``labels`` (None = all neq) is reused."""
    _check_eps(eps)
    if n < 1:
        raise UsageError("support bound must be positive")
    t0 = time.perf_counter() if started is None else started
    graph = session.graph
    threshold = eps / 4 / n
    if not np.any(session.dist.probs > threshold):
        raise DegenerateDistribution(f"no vertex has probability above eps/(4n) = {threshold}")
    state = _RunState.open(session, threshold)
    result = None
    spec = None
    for r in range(max(1, repetitions)):
        lab = labels_for_repetition(r) if labels_for_repetition is not None else labels
        spec = _label_spec(graph, lab)
        result = _run_walks(state, eps, n, spec, schedule, stop_when_closed)
        if result[0] == REJECT:
            break
    decision, witness, params, edges, flags = result
    if decision == REJECT:
        _validate_witness(witness, graph, spec.fn)
    return Verdict(
        decision=decision, witness=witness,
        sample_queries=session.sample_queries, eval_queries=session.eval_queries,
        graph_queries=session.graph_queries,
        raw_eval_queries=int(state.counters[_kernels.RAW_EVAL]),
        raw_graph_queries=int(state.counters[_kernels.RAW_GRAPH]),
        support_bound=int(n), params=params, explored_edges=edges, flags=tuple(flags),
        wall_ms=(time.perf_counter() - t0) * 1000.0)


def test_bipartite_with_bound(graph: BoundedDegreeGraph, dist, eps: float, n: int, seed=None, *,
                              schedule: Schedule = DEFAULT_SCHEDULE, stop_when_closed: bool = True,
                              repetitions: int = 1) -> Verdict:
    """Bipartiteness tester given an upper bound ``n`` on the minimal
    eps/4-effective support size of D. Never rejects a bipartite graph.

    ``stop_when_closed`` ends the walks once every positive-weight edge
    reachable from the explored region has been traversed; the decision is
    unaffected, only the work done after that point is skipped.
    """
    session = _session_for(graph, dist, seed)
    return run_with_bound(session, eps, n, schedule=schedule, stop_when_closed=stop_when_closed,
                          repetitions=repetitions)


def test_generalized_2coloring(graph: BoundedDegreeGraph, labels, dist, eps: float, n: int,
                               seed=None, *, schedule: Schedule = DEFAULT_SCHEDULE,
                               stop_when_closed: bool = True, repetitions: int = 1) -> Verdict:
    """Like :func:`test_bipartite_with_bound`, with eq edges imposing equal colors.

    ``labels`` is a callable (u, v) -> "eq"/"neq", a mapping from edges to
    labels, or an EdgeLabeler.
    """
    session = _session_for(graph, dist, seed)
    return run_with_bound(session, eps, n, labels=labels, schedule=schedule,
                          stop_when_closed=stop_when_closed, repetitions=repetitions)


def estimate_support_bound(session: OracleSession, eps: float) -> int:
    """Upper bound on the minimal eps/4-effective support size (w.p. >= 2/3)."""
    return refined_estimate_state(session, eps / COMPOSITION_ETA_DIVISOR, COMPOSITION_BETA).estimate


def test_bipartite(graph: BoundedDegreeGraph, dist, eps: float, seed=None, *,
                   schedule: Schedule = DEFAULT_SCHEDULE, stop_when_closed: bool = True,
                   repetitions: int = 1) -> Verdict:
    """Bipartiteness tester that estimates the support bound itself."""
    _check_eps(eps)
    t0 = time.perf_counter()
    session = _session_for(graph, dist, seed)
    n = estimate_support_bound(session, eps)
    return run_with_bound(session, eps, n, schedule=schedule, stop_when_closed=stop_when_closed,
                          repetitions=repetitions, started=t0)


# public names start with "test_"; keep pytest from collecting them on import
for _fn in (test_bipartite, test_bipartite_with_bound, test_generalized_2coloring):
    _fn.__test__ = False
del _fn
