"""Bounded-degree graphs in incidence-function form, instance generators,
and the parity-consistency check used to decide acceptance.
"""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ParseError, SpecError, UsageError, ValidationError

# g(v, i) answer when v has fewer than i neighbors; never a vertex id.
BOTTOM = None

Edge = tuple[int, int]
ParityEdge = tuple[int, int, int]


def canonical_edge(u: int, v: int) -> Edge:
    return (u, v) if u < v else (v, u)


class BoundedDegreeGraph:
    """An immutable simple graph on vertices ``1..vertex_count`` with degree
    at most ``degree_bound``.

    Neighbor slots follow ascending vertex id, so ``incidence(v, 1)`` is the
    smallest neighbor of ``v``.
    """

    __slots__ = ("vertex_count", "degree_bound", "_adj", "_edges", "_slots")

    def __init__(self, vertex_count: int, degree_bound: int,
                 neighbors: Mapping[int, Iterable[int]] | Sequence[Iterable[int]]):
        if vertex_count < 1:
            raise ValidationError("range", f"vertex_count must be positive, got {vertex_count}")
        if degree_bound < 1:
            raise ValidationError("degree", f"degree bound must be positive, got {degree_bound}")
        self.vertex_count = int(vertex_count)
        self.degree_bound = int(degree_bound)

        if isinstance(neighbors, Mapping):
            items = neighbors.items()
        else:
            # sequence form is indexed by vertex id - 1
            items = ((v + 1, nb) for v, nb in enumerate(neighbors))

        adj: list[tuple[int, ...]] = [()] * (self.vertex_count + 1)
        seen_vertices = set()
        for v, nb in items:
            v = int(v)
            if not 1 <= v <= self.vertex_count:
                raise ValidationError("range", f"vertex {v} outside 1..{self.vertex_count}")
            if v in seen_vertices:
                raise ValidationError("multi-edge", f"vertex {v} listed twice")
            seen_vertices.add(v)
            nb = [int(u) for u in nb]
            for u in nb:
                if not 1 <= u <= self.vertex_count:
                    raise ValidationError("range", f"neighbor {u} of {v} outside 1..{self.vertex_count}")
                if u == v:
                    raise ValidationError("self-loop", f"vertex {v} lists itself")
            if len(set(nb)) != len(nb):
                raise ValidationError("multi-edge", f"vertex {v} lists a neighbor twice")
            if len(nb) > self.degree_bound:
                raise ValidationError(
                    "degree", f"vertex {v} has {len(nb)} neighbors, bound is {self.degree_bound}")
            adj[v] = tuple(sorted(nb))

        for v in range(1, self.vertex_count + 1):
            for u in adj[v]:
                if v not in adj[u]:
                    raise ValidationError("asymmetry", f"{u} is a neighbor of {v} but not vice versa")

        self._adj = tuple(adj)
        self._edges: list[Edge] | None = None
        self._slots: np.ndarray | None = None

    @classmethod
    def from_edges(cls, vertex_count: int, degree_bound: int,
                   edges: Iterable[Edge]) -> "BoundedDegreeGraph":
        nb: dict[int, list[int]] = {v: [] for v in range(1, vertex_count + 1)}
        for u, v in edges:
            if u not in nb or v not in nb:
                raise ValidationError("range", f"edge ({u}, {v}) outside 1..{vertex_count}")
            nb[u].append(v)
            if u != v:
                nb[v].append(u)
        return cls(vertex_count, degree_bound, nb)

    # -- oracle-level access -------------------------------------------------

    def incidence(self, v: int, i: int) -> int | None:
        """g(v, i): the i-th neighbor of v (1-based), or BOTTOM."""
        if not isinstance(v, (int, np.integer)) or not 1 <= v <= self.vertex_count:
            raise UsageError(f"vertex {v!r} outside 1..{self.vertex_count}")
        if not isinstance(i, (int, np.integer)) or not 1 <= i <= self.degree_bound:
            raise UsageError(f"slot {i!r} outside 1..{self.degree_bound}")
        nb = self._adj[v]
        return nb[i - 1] if i <= len(nb) else BOTTOM

    # -- whole-graph views (truth oracles, generators, I/O) ------------------

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self._adj[v]

    def degree(self, v: int) -> int:
        return len(self._adj[v])

    def vertices(self) -> range:
        return range(1, self.vertex_count + 1)

    def edges(self) -> list[Edge]:
        """Canonical (u < v) edges in lexicographic order."""
        if self._edges is None:
            self._edges = [(v, u) for v in self.vertices() for u in self._adj[v] if v < u]
        return list(self._edges)

    @property
    def edge_count(self) -> int:
        return sum(len(nb) for nb in self._adj) // 2

    def slot_array(self) -> np.ndarray:
        """(vertex_count + 1, d) array of neighbor ids, 0 standing for BOTTOM."""
        if self._slots is None:
            arr = np.zeros((self.vertex_count + 1, self.degree_bound), dtype=np.int64)
            for v in self.vertices():
                nb = self._adj[v]
                arr[v, :len(nb)] = nb
            arr.setflags(write=False)
            self._slots = arr
        return self._slots

    def relabel(self, perm: Mapping[int, int] | Sequence[int]) -> "BoundedDegreeGraph":
        """Return the isomorphic graph with vertex v renamed perm[v]."""
        if not isinstance(perm, Mapping):
            perm = {v + 1: int(p) for v, p in enumerate(perm)}
        return BoundedDegreeGraph.from_edges(
            self.vertex_count, self.degree_bound, ((perm[u], perm[v]) for u, v in self.edges()))

    def is_forest(self) -> bool:
        parent = list(range(self.vertex_count + 1))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for u, v in self.edges():
            ru, rv = find(u), find(v)
            if ru == rv:
                return False
            parent[ru] = rv
        return True

    def __eq__(self, other):
        if not isinstance(other, BoundedDegreeGraph):
            return NotImplemented
        return (self.vertex_count == other.vertex_count
                and self.degree_bound == other.degree_bound
                and self._adj == other._adj)

    def __hash__(self):
        return hash((self.vertex_count, self.degree_bound, self._adj))

    def __repr__(self):
        return (f"BoundedDegreeGraph(n={self.vertex_count}, d={self.degree_bound}, "
                f"m={self.edge_count})")


# -- text format ---------------------------------------------------------------

def load_graph(text: str) -> BoundedDegreeGraph:
    """Parse the ``n d`` header plus ``v: u1 u2 ...`` lines.

    Vertices without a line are isolated. Neighbor lists need not be sorted,
    but only sorted input round-trips byte-for-byte through :func:`dump_graph`.
    """
    lines = text.splitlines()
    header_at = None
    for lineno, raw in enumerate(lines, start=1):
        if raw.strip() and not raw.lstrip().startswith("#"):
            header_at = lineno
            break
    if header_at is None:
        raise ParseError(1, "missing 'n d' header")
    parts = lines[header_at - 1].split()
    if len(parts) != 2 or not all(p.isdigit() for p in parts):
        raise ParseError(header_at, f"expected 'n d' header, got {lines[header_at - 1]!r}")
    n, d = int(parts[0]), int(parts[1])

    nb: dict[int, list[int]] = {}
    for lineno in range(header_at + 1, len(lines) + 1):
        raw = lines[lineno - 1]
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        head, sep, rest = line.partition(":")
        if not sep or not head.strip().isdigit():
            raise ParseError(lineno, f"expected 'v: neighbors', got {raw!r}")
        v = int(head)
        tokens = rest.split()
        if not all(t.isdigit() for t in tokens):
            raise ParseError(lineno, f"non-integer neighbor in {raw!r}")
        if v in nb:
            raise ParseError(lineno, f"vertex {v} listed twice")
        nb[v] = [int(t) for t in tokens]
    return BoundedDegreeGraph(n, d, nb)


def dump_graph(graph: BoundedDegreeGraph) -> str:
    out = [f"{graph.vertex_count} {graph.degree_bound}"]
    for v in graph.vertices():
        nb = graph.neighbors(v)
        out.append(f"{v}: " + " ".join(map(str, nb)) if nb else f"{v}:")
    return "\n".join(out) + "\n"


def read_graph(path) -> BoundedDegreeGraph:
    with open(path, "r", encoding="ascii") as fh:
        return load_graph(fh.read())


def write_graph(graph: BoundedDegreeGraph, path) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(dump_graph(graph))


# -- instance generation -------------------------------------------------------

FAMILIES = ("odd_cycle", "even_cycle", "random_bipartite", "random_d_regular", "forest",
            "cycles_plus_forest", "custom", "path", "complete", "petersen", "torus",
            "disjoint_triangles")


@dataclass(frozen=True)
class InstanceFamily:
    family: str
    size: int
    degree: int = 2
    seed: int = 0
    edges: tuple[Edge, ...] = field(default=())


def _cycle_edges(vertices: Sequence[int]) -> list[Edge]:
    k = len(vertices)
    return [(vertices[i], vertices[(i + 1) % k]) for i in range(k)]


def _random_forest_edges(vertices: Sequence[int], d: int, rng: np.random.Generator,
                         attach_prob: float = 0.9) -> list[Edge]:
    deg = {v: 0 for v in vertices}
    placed: list[int] = []
    edges = []
    for v in vertices:
        open_ = [u for u in placed if deg[u] < d]
        if open_ and rng.random() < attach_prob:
            u = open_[int(rng.integers(len(open_)))]
            edges.append((u, v))
            deg[u] += 1
            deg[v] += 1
        placed.append(v)
    return edges


def generate_instance(spec: InstanceFamily) -> BoundedDegreeGraph:
    """Deterministic graph for ``spec``; raises SpecError when infeasible."""
    fam, n, d = spec.family, spec.size, spec.degree
    rng = np.random.default_rng(spec.seed)
    if fam not in FAMILIES:
        raise SpecError(f"unknown family {fam!r}")
    if n < 1:
        raise SpecError("size must be positive")

    if fam in ("odd_cycle", "even_cycle"):
        if n < 3:
            raise SpecError("cycles need size >= 3")
        if (n % 2 == 1) != (fam == "odd_cycle"):
            raise SpecError(f"{fam} with size {n}")
        if d < 2:
            raise SpecError("cycles need degree bound >= 2")
        return BoundedDegreeGraph.from_edges(n, d, _cycle_edges(range(1, n + 1)))

    if fam == "path":
        if d < 2 and n > 2:
            raise SpecError("paths need degree bound >= 2")
        return BoundedDegreeGraph.from_edges(n, d, [(v, v + 1) for v in range(1, n)])

    if fam == "complete":
        if d < n - 1:
            raise SpecError(f"K_{n} needs degree bound >= {n - 1}")
        return BoundedDegreeGraph.from_edges(n, d, itertools.combinations(range(1, n + 1), 2))

    if fam == "petersen":
        if d < 3:
            raise SpecError("Petersen graph needs degree bound >= 3")
        outer = _cycle_edges(range(1, 6))
        spokes = [(i, i + 5) for i in range(1, 6)]
        inner = [(6 + i, 6 + (i + 2) % 5) for i in range(5)]
        return BoundedDegreeGraph.from_edges(10, d, outer + spokes + inner)

    if fam == "disjoint_triangles":
        if d < 2:
            raise SpecError("triangles need degree bound >= 2")
        edges = []
        for t in range(n):
            edges += _cycle_edges([3 * t + 1, 3 * t + 2, 3 * t + 3])
        return BoundedDegreeGraph.from_edges(3 * n, d, edges)

    if fam == "torus":
        # size x size wrap-around grid; bipartite iff size is even
        if n < 3 or d < 4:
            raise SpecError("torus needs size >= 3 and degree bound >= 4")
        idx = lambda r, c: (r % n) * n + (c % n) + 1  # noqa: E731
        edges = set()
        for r in range(n):
            for c in range(n):
                edges.add(canonical_edge(idx(r, c), idx(r, c + 1)))
                edges.add(canonical_edge(idx(r, c), idx(r + 1, c)))
        return BoundedDegreeGraph.from_edges(n * n, d, sorted(edges))

    if fam == "random_bipartite":
        if n < 2:
            raise SpecError("random_bipartite needs size >= 2")
        left = np.arange(1, (n + 1) // 2 + 1)
        right = np.arange((n + 1) // 2 + 1, n + 1)
        deg = np.zeros(n + 1, dtype=np.int64)
        edges: set[Edge] = set()
        for _ in range(d):
            for u, v in zip(rng.permutation(left), rng.permutation(right)):
                e = canonical_edge(int(u), int(v))
                if e in edges or deg[u] >= d or deg[v] >= d:
                    continue
                edges.add(e)
                deg[u] += 1
                deg[v] += 1
        return BoundedDegreeGraph.from_edges(n, d, sorted(edges))

    if fam == "random_d_regular":
        if (n * d) % 2 == 1:
            raise SpecError(f"no {d}-regular graph on {n} vertices (n*d odd)")
        if d >= n:
            raise SpecError(f"degree {d} too large for {n} vertices")
        import networkx as nx
        g = nx.random_regular_graph(d, n, seed=int(spec.seed))
        return BoundedDegreeGraph.from_edges(n, d, ((u + 1, v + 1) for u, v in g.edges()))

    if fam == "forest":
        if d < 1:
            raise SpecError("forest needs degree bound >= 1")
        order = [int(v) for v in rng.permutation(np.arange(1, n + 1))]
        return BoundedDegreeGraph.from_edges(n, d, _random_forest_edges(order, d, rng))

    if fam == "cycles_plus_forest":
        if n < 3 or d < 2:
            raise SpecError("cycles_plus_forest needs size >= 3 and degree bound >= 2")
        edges = []
        v = 1
        budget = max(3, n // 2)
        while v + 2 <= min(n, budget):
            k = int(rng.integers(3, 8))
            k = min(k, n - v + 1)
            if k < 3:
                break
            edges += _cycle_edges(list(range(v, v + k)))
            v += k
        rest = [int(u) for u in rng.permutation(np.arange(v, n + 1))]
        edges += _random_forest_edges(rest, d, rng)
        return BoundedDegreeGraph.from_edges(n, d, edges)

    # custom
    return BoundedDegreeGraph.from_edges(n, d, spec.edges)


def disjoint_union(*graphs: BoundedDegreeGraph) -> BoundedDegreeGraph:
    d = max(g.degree_bound for g in graphs)
    edges, offset = [], 0
    for g in graphs:
        edges += [(u + offset, v + offset) for u, v in g.edges()]
        offset += g.vertex_count
    return BoundedDegreeGraph.from_edges(offset, d, edges)


# -- parity consistency ------------------------------------------------------------

@dataclass
class ExploredSubgraph:
    """Edges seen during a run as (u, v, parity); parity 1 means the endpoints
    must get different colors, 0 means equal colors."""
    edges: list[ParityEdge] = field(default_factory=list)

    def add(self, u: int, v: int, parity: int = 1) -> None:
        self.edges.append((u, v, parity))

    def __len__(self):
        return len(self.edges)


class ParityUnionFind:
    """Union-find where every vertex stores its color parity relative to its root.

    Merging edges are remembered as a spanning forest, so a conflict can be
    turned into an explicit odd cycle.
    """

    def __init__(self):
        self.parent: dict[int, int] = {}
        self.parity: dict[int, int] = {}
        self.rank: dict[int, int] = {}
        self.tree: dict[int, list[tuple[int, int]]] = {}

    def find(self, v: int) -> tuple[int, int]:
        parent = self.parent
        if v not in parent:
            parent[v] = v
            self.parity[v] = 0
            self.rank[v] = 0
            return v, 0
        path = []
        while parent[v] != v:
            path.append(v)
            v = parent[v]
        root = v
        # compress, accumulating parity from the top of the path down
        acc = 0
        for u in reversed(path):
            acc ^= self.parity[u]
            self.parity[u] = acc
            parent[u] = root
        return root, (self.parity[path[0]] if path else 0)

    def union(self, u: int, v: int, p: int) -> bool:
        """Impose color(u) XOR color(v) == p. False if that contradicts earlier edges."""
        ru, pu = self.find(u)
        rv, pv = self.find(v)
        if ru == rv:
            return (pu ^ pv) == p
        if self.rank[ru] < self.rank[rv]:
            ru, rv, pu, pv = rv, ru, pv, pu
        self.parent[rv] = ru
        self.parity[rv] = pu ^ pv ^ p
        if self.rank[ru] == self.rank[rv]:
            self.rank[ru] += 1
        self.tree.setdefault(u, []).append((v, p))
        self.tree.setdefault(v, []).append((u, p))
        return True

    def tree_path(self, src: int, dst: int) -> list[ParityEdge]:
        prev: dict[int, tuple[int, int]] = {src: (src, -1)}
        queue = deque([src])
        while queue:
            x = queue.popleft()
            if x == dst:
                break
            for y, p in self.tree.get(x, ()):
                if y not in prev:
                    prev[y] = (x, p)
                    queue.append(y)
        path = []
        x = dst
        while x != src:
            px, p = prev[x]
            path.append((px, x, p))
            x = px
        path.reverse()
        return path

    def witness(self, u: int, v: int, p: int) -> list[ParityEdge]:
        """Odd cycle: forest path u -> v closed by the conflicting edge (v, u)."""
        return self.tree_path(u, v) + [(v, u, p)]

    def coloring(self) -> dict[int, int]:
        return {v: self.find(v)[1] for v in self.parent}


@dataclass
class ParityCheck:
    consistent: bool
    coloring: dict[int, int] | None = None
    witness: list[ParityEdge] | None = None

    def __bool__(self):
        return self.consistent


def check_parity_consistency(sub: ExploredSubgraph | Iterable[ParityEdge]) -> ParityCheck:
    """Decide whether some 0/1 coloring satisfies every parity edge.

    On failure the result carries a cycle whose parities sum to an odd number.
    """
    edges = sub.edges if isinstance(sub, ExploredSubgraph) else sub
    uf = ParityUnionFind()
    for u, v, p in edges:
        if u == v:
            if p:
                return ParityCheck(False, witness=[(u, v, p)])
            continue
        if not uf.union(u, v, p):
            return ParityCheck(False, witness=uf.witness(u, v, p))
    return ParityCheck(True, coloring=uf.coloring())


def is_odd_cycle(witness: Sequence[ParityEdge]) -> bool:
    """True iff ``witness`` is a closed walk whose parity bits sum to odd."""
    if not witness:
        return False
    for (a, b, _), (c, _, _) in zip(witness, list(witness[1:]) + [witness[0]]):
        if b != c:
            return False
    return sum(p for _, _, p in witness) % 2 == 1
