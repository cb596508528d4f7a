"""Exact distances for small instances, the explicit parallel-edge multigraph,
and the labeling experiment behind the cycle-freeness reduction.

Distances are sums of removed edge weights, where the edge {u, v} weighs
2*(D(u)+D(v))/d. Reported distances are always recomputed with math.fsum
over the removed set, so equal removed multisets give bit-identical values.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from numba import njit

from .errors import CapError, ScaleError, UsageError
from .graph_core import BoundedDegreeGraph, canonical_edge
from .vertex_dist import OracleSession, TrimmedDistribution, VertexDistribution
from .walk_tester import WalkOracle, _normalize_labels, walk_steps

BRUTE_FORCE_MAX_VERTICES = 24
EXHAUSTIVE_MAX_EDGES = 16

Edge = tuple[int, int]


@dataclass
class DistanceReport:
    distance: float
    removed: list[Edge]
    method: str  # bruteforce | exact-forest | exhaustive-subset
    coloring: dict[int, int] | None = None

    def to_dict(self) -> dict:
        return {"distance": self.distance, "removed": [list(e) for e in self.removed],
                "method": self.method,
                "coloring": None if self.coloring is None else {str(k): c for k, c in
                                                                sorted(self.coloring.items())}}


def _probs(dist) -> np.ndarray:
    if isinstance(dist, TrimmedDistribution):
        return dist.probs
    return dist.probs


def edge_weight(graph: BoundedDegreeGraph, dist, u: int, v: int) -> float:
    p = _probs(dist)
    return 2.0 * (p[u] + p[v]) / graph.degree_bound


def edge_weights(graph: BoundedDegreeGraph, dist) -> dict[Edge, float]:
    p = _probs(dist)
    d = graph.degree_bound
    return {(u, v): 2.0 * (p[u] + p[v]) / d for u, v in graph.edges()}


def total_weight(graph: BoundedDegreeGraph, dist) -> float:
    return math.fsum(edge_weights(graph, dist).values())


# -- brute force over colorings --------------------------------------------------

@njit(cache=True)
def _min_violation(n, eu, ev, w, parity, lo, hi):
    """Minimum of sum w_e [chi(u) xor chi(v) != parity_e] over colorings
    chi = c in [lo, hi) (bit v-2 of c colors vertex v; vertex 1 is color 0)."""
    best = np.inf
    arg = lo
    m = eu.size
    for c in range(lo, hi):
        s = 0.0
        for e in range(m):
            a = eu[e]
            b = ev[e]
            ba = (c >> (a - 2)) & 1 if a >= 2 else 0
            bb = (c >> (b - 2)) & 1 if b >= 2 else 0
            if (ba ^ bb) != parity[e]:
                s += w[e]
        if s < best:
            best = s
            arg = c
    return best, arg


def _coloring_search(graph: BoundedDegreeGraph, weights: np.ndarray, parity: np.ndarray
                     ) -> tuple[int, list[int]]:
    n = graph.vertex_count
    if n > BRUTE_FORCE_MAX_VERTICES:
        raise CapError(f"brute force is capped at {BRUTE_FORCE_MAX_VERTICES} vertices, got {n}")
    edges = graph.edges()
    if not edges:
        return 0, []
    eu = np.array([e[0] for e in edges], dtype=np.int64)
    ev = np.array([e[1] for e in edges], dtype=np.int64)
    _, arg = _min_violation(n, eu, ev, weights, parity, 0, 1 << max(0, n - 1))
    violated = [i for i, (a, b) in enumerate(edges)
                if (((arg >> (a - 2)) & 1 if a >= 2 else 0) ^ ((arg >> (b - 2)) & 1 if b >= 2 else 0))
                != parity[i]]
    return arg, violated


def _coloring_dict(n: int, c: int) -> dict[int, int]:
    return {v: ((c >> (v - 2)) & 1 if v >= 2 else 0) for v in range(1, n + 1)}


def _labeled_distance(graph, dist, parity: np.ndarray) -> DistanceReport:
    weights = edge_weights(graph, dist)
    edges = graph.edges()
    w = np.array([weights[e] for e in edges], dtype=np.float64)
    arg, violated = _coloring_search(graph, w, parity)
    removed = [edges[i] for i in violated]
    return DistanceReport(math.fsum(weights[e] for e in removed), removed, "bruteforce",
                          _coloring_dict(graph.vertex_count, arg))


def bipartite_distance(graph: BoundedDegreeGraph, dist) -> DistanceReport:
    """Minimum weight of edges whose removal leaves the graph bipartite."""
    return _labeled_distance(graph, dist, np.ones(graph.edge_count, dtype=np.int64))


def label_parities(graph: BoundedDegreeGraph, labels) -> np.ndarray:
    fn = _normalize_labels(labels)
    if fn is None:
        return np.ones(graph.edge_count, dtype=np.int64)
    return np.array([fn(u, v) for u, v in graph.edges()], dtype=np.int64)


def gen2col_distance(graph: BoundedDegreeGraph, labels, dist) -> DistanceReport:
    """Minimum weight of edges whose removal leaves a legal eq/neq 2-coloring."""
    return _labeled_distance(graph, dist, label_parities(graph, labels))


# -- cycle-freeness ----------------------------------------------------------------

def _forest_check(n: int, edges) -> bool:
    parent = list(range(n + 1))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in edges:
        ru, rv = find(u), find(v)
        if ru == rv:
            return False
        parent[ru] = rv
    return True


def cyclefree_distance(graph: BoundedDegreeGraph, dist) -> DistanceReport:
    """Total weight outside a maximum-weight spanning forest (Kruskal, ties in
    canonical edge order)."""
    weights = edge_weights(graph, dist)
    order = sorted(graph.edges(), key=lambda e: -weights[e])  # stable: canonical order on ties
    parent = list(range(graph.vertex_count + 1))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    removed = []
    for u, v in order:
        ru, rv = find(u), find(v)
        if ru == rv:
            removed.append((u, v))
        else:
            parent[ru] = rv
    removed.sort()
    return DistanceReport(math.fsum(weights[e] for e in removed), removed, "exact-forest")


@njit(cache=True)
def _subset_scan(n, eu, ev, w):
    """Float removed-weight of every edge subset whose complement is a forest
    (inf otherwise), indexed by the removed-set bitmask."""
    m = eu.size
    out = np.full(1 << m, np.inf)
    parent = np.empty(n + 1, dtype=np.int64)
    for mask in range(1 << m):
        for i in range(n + 1):
            parent[i] = i
        ok = True
        s = 0.0
        for e in range(m):
            if (mask >> e) & 1:
                s += w[e]
                continue
            a = eu[e]
            while parent[a] != a:
                a = parent[a]
            b = ev[e]
            while parent[b] != b:
                b = parent[b]
            if a == b:
                ok = False
                break
            parent[a] = b
        if ok:
            out[mask] = s
    return out


def exhaustive_cyclefree_distance(graph: BoundedDegreeGraph, dist) -> DistanceReport:
    """Minimum over every edge subset whose removal leaves a forest."""
    edges = graph.edges()
    m = len(edges)
    if m > EXHAUSTIVE_MAX_EDGES:
        raise CapError(f"exhaustive search is capped at {EXHAUSTIVE_MAX_EDGES} edges, got {m}")
    weights = edge_weights(graph, dist)
    if m == 0:
        return DistanceReport(0.0, [], "exhaustive-subset")
    w = np.array([weights[e] for e in edges])
    scan = _subset_scan(graph.vertex_count, np.array([e[0] for e in edges]),
                        np.array([e[1] for e in edges]), w)
    best = scan.min()
    # float sums can misorder near-ties; settle them with exact sums
    candidates = np.flatnonzero(scan <= best + 1e-9)
    best_sum, best_mask = math.inf, 0
    for mask in candidates.tolist():
        s = math.fsum(w[e] for e in range(m) if (mask >> e) & 1)
        if s < best_sum:
            best_sum, best_mask = s, mask
    removed = [edges[e] for e in range(m) if (best_mask >> e) & 1]
    return DistanceReport(best_sum, removed, "exhaustive-subset")


# -- explicit parallel-edge multigraph -------------------------------------------------

@dataclass
class MentalMultigraph:
    scale: int
    multiplicity: dict[Edge, int]
    vertices: list[int]
    multidegree: dict[int, int]
    rho: float = 0.0
    degree_bound: int = 0

    @property
    def edge_total(self) -> int:
        return sum(self.multiplicity.values())

    def m(self, u: int, v: int) -> int:
        return self.multiplicity.get(canonical_edge(u, v), 0)

    def step_distribution(self, v: int) -> dict[int, float]:
        dv = self.multidegree.get(v, 0)
        if dv == 0:
            raise UsageError(f"vertex {v} is not in V'")
        out = {}
        for (a, b), m in self.multiplicity.items():
            if m and v in (a, b):
                out[b if a == v else a] = m / dv
        return out


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def build_mental_multigraph(graph: BoundedDegreeGraph, dist, scale: int) -> MentalMultigraph:
    """m(u, v) = round((D'(u)+D'(v)) * N) parallel copies of every edge; isolated
    vertices dropped. ``dist`` must already be trimmed (minimum atom rho > 0)."""
    p = _probs(dist)
    pos = p[p > 0]
    rho = float(pos.min())
    if scale * rho < 10:
        raise ScaleError(f"N * rho = {scale * rho:.3g} < 10; increase N")
    mult = {}
    deg: dict[int, int] = {}
    for u, v in graph.edges():
        m = _round_half_up((p[u] + p[v]) * scale)
        mult[(u, v)] = m
        if m:
            deg[u] = deg.get(u, 0) + m
            deg[v] = deg.get(v, 0) + m
    return MentalMultigraph(scale, mult, sorted(deg), deg, rho, graph.degree_bound)


def walk_equivalence_check(graph: BoundedDegreeGraph, dist, scale: int, v: int, samples: int,
                           seed=None) -> float:
    """Total variation between ``samples`` implemented walk steps at v and the
    degree-proportional step of the explicit multigraph."""
    mg = build_mental_multigraph(graph, dist, scale)
    exact = mg.step_distribution(v)
    if isinstance(dist, TrimmedDistribution):
        base, threshold = dist.base, dist.threshold
    else:
        base, threshold = dist, 0.0
    session = OracleSession(base, graph, seed, strict=False)
    steps = walk_steps(WalkOracle(session, threshold), v, samples)
    nb, counts = np.unique(steps, return_counts=True)
    emp = dict(zip(nb.tolist(), (counts / samples).tolist()))
    keys = set(exact) | set(emp)
    return 0.5 * math.fsum(abs(exact.get(k, 0.0) - emp.get(k, 0.0)) for k in keys)


def multigraph_bipartite_removals(graph: BoundedDegreeGraph, mg: MentalMultigraph) -> int:
    """Fewest parallel edges whose removal makes the multigraph bipartite."""
    edges = graph.edges()
    w = np.array([float(mg.m(u, v)) for u, v in edges])
    arg, violated = _coloring_search(graph, w, np.ones(len(edges), dtype=np.int64))
    return sum(mg.m(*edges[i]) for i in violated)


def multigraph_distance_check(graph: BoundedDegreeGraph, dist, scale: int) -> tuple[float, int]:
    """(delta*N - d*|V'|, edges that must be removed from the multigraph), where
    delta is the weighted bipartite distance; the first never exceeds the second."""
    mg = build_mental_multigraph(graph, dist, scale)
    delta = bipartite_distance(graph, dist).distance
    return delta * scale - graph.degree_bound * len(mg.vertices), multigraph_bipartite_removals(graph, mg)


# -- labeling experiment ------------------------------------------------------------------

@dataclass
class GapStatistics:
    labelings: int
    threshold: float
    fraction_far: float
    fraction_positive: float
    histogram: dict[float, int] = field(default_factory=dict)
    mode: str = "exhaustive"

    def to_dict(self) -> dict:
        return {"labelings": self.labelings, "threshold": self.threshold,
                "fraction_far": self.fraction_far, "fraction_positive": self.fraction_positive,
                "histogram": {repr(k): v for k, v in sorted(self.histogram.items())},
                "mode": self.mode}


def _cut_space(graph: BoundedDegreeGraph) -> np.ndarray:
    """Bitmasks (over graph.edges() order) of all edge sets cut by some coloring."""
    edges = graph.edges()
    n = graph.vertex_count
    # one generator per non-root vertex of a spanning forest suffices, but the
    # star cuts of all vertices span the same space
    gens = []
    for v in range(1, n + 1):
        mask = 0
        for i, (a, b) in enumerate(edges):
            if v in (a, b):
                mask |= 1 << i
        if mask:
            gens.append(mask)
    space = {0}
    for g in gens:
        if g in space:
            continue
        space |= {x ^ g for x in space}
    return np.array(sorted(space), dtype=np.int64)


def _subset_weights(w: np.ndarray) -> np.ndarray:
    m = w.size
    table = np.zeros(1 << m)
    for e in range(m):
        table[1 << e: 1 << (e + 1)] = table[: 1 << e] + w[e]
    return table


def reduction_gap_experiment(graph: BoundedDegreeGraph, dist, eps: float, *, sampled: bool = False,
                             samples: int = 1000, seed=None) -> GapStatistics:
    """For every labeling tau (or ``samples`` random ones), the eq/neq 2-coloring
    distance of (G, tau); reports the fraction at least eps/(8 log2|V|)."""
    edges = graph.edges()
    m = len(edges)
    if not sampled and m > EXHAUSTIVE_MAX_EDGES:
        raise CapError(f"exhaustive labeling enumeration is capped at {EXHAUSTIVE_MAX_EDGES} edges")
    if sampled and samples < 1000:
        raise UsageError("sampled mode needs at least 1000 labelings")
    if sampled and m > 30:
        raise CapError("sampled mode still tabulates subset weights; at most 30 edges")
    threshold = eps / (8 * math.log2(graph.vertex_count))
    weights = edge_weights(graph, dist)
    w = np.array([weights[e] for e in edges])
    table = _subset_weights(w)
    cuts = _cut_space(graph)
    if sampled:
        rng = np.random.default_rng(seed)
        taus = rng.integers(0, 1 << m, size=samples, dtype=np.int64)
        mode = "sampled"
    else:
        taus = np.arange(1 << m, dtype=np.int64)
        mode = "exhaustive"
    # a legal coloring of (G, tau) minus R exists iff tau xor R is a cut, so the
    # distance is the lightest tau xor c over cuts c; parity 1 (neq) = bit set
    best = np.full(taus.size, np.inf)
    chunk = max(1, (1 << 22) // max(1, cuts.size))
    for i in range(0, taus.size, chunk):
        t = taus[i:i + chunk]
        best[i:i + chunk] = table[t[:, None] ^ cuts[None, :]].min(axis=1)
    dists = np.round(best, 12)
    values, counts = np.unique(dists, return_counts=True)
    hist = {float(v): int(c) for v, c in zip(values, counts)}
    far = int(np.count_nonzero(best >= threshold - 1e-12))
    positive = int(np.count_nonzero(best > 1e-12))
    return GapStatistics(int(taus.size), threshold, far / taus.size, positive / taus.size, hist, mode)


def all_edge_subsets(graph: BoundedDegreeGraph):
    """Every subset of edges (for small exhaustive checks)."""
    edges = graph.edges()
    for k in range(len(edges) + 1):
        yield from combinations(edges, k)
