"""Vertex distributions, the counted oracle session (sD, eD, g), trimming and
the exact effective support size.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from . import _kernels
from .errors import (DegenerateDistribution, DistributionError, LocalityError, ParseError,
                     RejectionCapExceeded, UsageError)
from .graph_core import BOTTOM, BoundedDegreeGraph

NORMALIZATION_TOL = 1e-12
LOAD_RENORMALIZE_TOL = 1e-9
REJECTION_CAP = 10**7


class _Undefined:
    """Answer of the ratio oracle when the denominator has probability zero."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "UNDEFINED"

    def __bool__(self):
        return False


UNDEFINED = _Undefined()


class VertexDistribution:
    """An explicit distribution over vertex ids ``1..vertex_count``.

    Probabilities live in a dense array indexed by vertex id (slot 0 unused).
    The object is immutable; randomness always comes from the caller's
    generator, so one distribution can serve many independent sessions.
    """

    __slots__ = ("vertex_count", "_p", "_atoms", "_cdf", "_alias")

    def __init__(self, probs: Mapping[int, float] | np.ndarray, vertex_count: int | None = None,
                 *, renormalize_tol: float = 0.0):
        if isinstance(probs, Mapping):
            ids = np.fromiter((int(v) for v in probs), dtype=np.int64, count=len(probs))
            vals = np.fromiter((float(probs[v]) for v in probs), dtype=np.float64, count=len(probs))
            top = int(ids.max()) if ids.size else 0
            n = top if vertex_count is None else int(vertex_count)
            if ids.size and (ids.min() < 1 or top > n):
                raise DistributionError(f"vertex ids must lie in 1..{n}")
            p = np.zeros(n + 1, dtype=np.float64)
            p[ids] = vals
        else:
            # dense array indexed by vertex id - 1
            arr = np.asarray(probs, dtype=np.float64)
            n = arr.size if vertex_count is None else int(vertex_count)
            if arr.size > n:
                raise DistributionError("more probabilities than vertices")
            p = np.zeros(n + 1, dtype=np.float64)
            p[1:arr.size + 1] = arr
        if n < 1:
            raise DistributionError("empty vertex universe")
        if not np.all(np.isfinite(p)) or np.any(p < 0):
            raise DistributionError("probabilities must be finite and non-negative")
        total = math.fsum(p)
        if abs(total - 1.0) > NORMALIZATION_TOL:
            if abs(total - 1.0) <= renormalize_tol and total > 0:
                p = p / total
            else:
                raise DistributionError(f"probabilities sum to {total!r}, not 1")
        p.setflags(write=False)
        self.vertex_count = n
        self._p = p
        atoms = np.flatnonzero(p)
        self._atoms = atoms
        self._cdf = np.cumsum(p[atoms])
        self._alias = None

    # -- constructors ---------------------------------------------------------

    @classmethod
    def uniform(cls, vertex_count: int, support: Iterable[int] | None = None) -> "VertexDistribution":
        ids = list(range(1, vertex_count + 1)) if support is None else sorted(set(support))
        q = 1.0 / len(ids)
        return cls({v: q for v in ids}, vertex_count)

    @classmethod
    def point_mass(cls, v: int, vertex_count: int | None = None) -> "VertexDistribution":
        return cls({v: 1.0}, vertex_count if vertex_count is not None else v)

    @classmethod
    def zipf(cls, atoms: int, s: float = 1.0, vertex_count: int | None = None,
             order: Iterable[int] | None = None) -> "VertexDistribution":
        """P(rank k) proportional to k^-s; ``order`` maps ranks to vertex ids."""
        w = 1.0 / np.arange(1, atoms + 1, dtype=np.float64) ** s
        w /= w.sum()
        ids = list(range(1, atoms + 1)) if order is None else list(order)[:atoms]
        return cls(dict(zip(ids, w.tolist())), vertex_count if vertex_count else max(ids),
                   renormalize_tol=1e-9)

    @classmethod
    def from_weights(cls, weights: Mapping[int, float], vertex_count: int | None = None
                     ) -> "VertexDistribution":
        total = math.fsum(weights.values())
        if total <= 0:
            raise DistributionError("weights must have positive total")
        return cls({v: w / total for v, w in weights.items()}, vertex_count,
                   renormalize_tol=1e-9)

    @classmethod
    def mixture(cls, parts: Iterable[tuple[float, "VertexDistribution"]]) -> "VertexDistribution":
        parts = list(parts)
        n = max(d.vertex_count for _, d in parts)
        p = np.zeros(n + 1)
        for w, d in parts:
            p[:d.vertex_count + 1] += w * d._p
        return cls(p[1:], n, renormalize_tol=1e-9)

    def extended(self, vertex_count: int) -> "VertexDistribution":
        """Same distribution over a larger vertex universe."""
        if vertex_count < self.vertex_count and np.any(self._p[vertex_count + 1:] > 0):
            raise DistributionError("cannot shrink below the support")
        return VertexDistribution(self._p[1:vertex_count + 1], vertex_count, renormalize_tol=1e-9)

    # -- whole-distribution views --------------------------------------------

    def prob(self, v: int) -> float:
        if not 1 <= v <= self.vertex_count:
            raise UsageError(f"vertex {v!r} outside 1..{self.vertex_count}")
        return float(self._p[v])

    @property
    def probs(self) -> np.ndarray:
        """Read-only dense array; entry v is D(v), entry 0 is unused."""
        return self._p

    def support(self) -> np.ndarray:
        return self._atoms

    def items(self) -> list[tuple[int, float]]:
        return [(int(v), float(self._p[v])) for v in self._atoms]

    def alias_tables(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(atoms, prob, alias) for O(1) sampling; built on first use."""
        if self._alias is None:
            prob, alias = _kernels.build_alias(self._p[self._atoms])
            self._alias = (self._atoms, prob, alias)
        return self._alias

    def draw(self, rng: np.random.Generator, k: int) -> np.ndarray:
        """k independent samples as an int64 array (no accounting)."""
        atoms, prob, alias = self.alias_tables()
        return _kernels.draw_atoms(rng, atoms, prob, alias, int(k))

    def __eq__(self, other):
        if not isinstance(other, VertexDistribution):
            return NotImplemented
        return self.vertex_count == other.vertex_count and np.array_equal(self._p, other._p)

    def __repr__(self):
        return f"VertexDistribution(n={self.vertex_count}, support={self._atoms.size})"


# -- file format ------------------------------------------------------------------

def load_distribution(text: str, vertex_count: int | None = None) -> VertexDistribution:
    """Parse ``v p`` lines; sums off by at most 1e-9 are renormalized."""
    probs: dict[int, float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2 or not parts[0].isdigit():
            raise ParseError(lineno, f"expected 'v p', got {raw!r}")
        try:
            p = float(parts[1])
        except ValueError:
            raise ParseError(lineno, f"bad probability {parts[1]!r}") from None
        v = int(parts[0])
        if v in probs:
            raise ParseError(lineno, f"vertex {v} listed twice")
        probs[v] = p
    if not probs:
        raise ParseError(1, "no atoms")
    return VertexDistribution(probs, vertex_count, renormalize_tol=LOAD_RENORMALIZE_TOL)


def dump_distribution(dist: VertexDistribution) -> str:
    return "".join(f"{v} {p!r}\n" for v, p in dist.items())


def read_distribution(path, vertex_count: int | None = None) -> VertexDistribution:
    with open(path, "r", encoding="ascii") as fh:
        return load_distribution(fh.read(), vertex_count)


def write_distribution(dist: VertexDistribution, path) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(dump_distribution(dist))


# -- oracle session ------------------------------------------------------------------

def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


class OracleSession:
    """Counted access to sD, eD and g for a single run.

    With ``strict=True`` every evaluation or incidence query must name a
    vertex that an earlier sample or incidence answer revealed.
    """

    def __init__(self, dist: VertexDistribution, graph: BoundedDegreeGraph | None = None,
                 seed=None, *, strict: bool = True):
        if graph is not None and dist.vertex_count != graph.vertex_count:
            dist = dist.extended(graph.vertex_count)
        self.dist = dist
        self.graph = graph
        self.rng = make_rng(seed)
        self.strict = strict
        self.sample_queries = 0
        self.eval_queries = 0
        self.graph_queries = 0
        self.revealed = np.zeros(dist.vertex_count + 1, dtype=bool)
        self._buf = np.empty(0, dtype=np.int64)
        self._buf_pos = 0

    @property
    def vertex_count(self) -> int:
        return self.dist.vertex_count

    def counters(self) -> dict[str, int]:
        return {"sample_q": self.sample_queries, "eval_q": self.eval_queries,
                "graph_q": self.graph_queries}

    def _check(self, v) -> int:
        if not isinstance(v, (int, np.integer)) or not 1 <= v <= self.dist.vertex_count:
            raise UsageError(f"vertex {v!r} outside 1..{self.dist.vertex_count}")
        if self.strict and not self.revealed[v]:
            raise LocalityError(f"query on vertex {v} that no oracle answer revealed")
        return int(v)

    # sD
    def sample(self) -> int:
        if self._buf_pos >= self._buf.size:
            self._buf = self.dist.draw(self.rng, 256)
            self._buf_pos = 0
        v = int(self._buf[self._buf_pos])
        self._buf_pos += 1
        self.sample_queries += 1
        self.revealed[v] = True
        return v

    def sample_many(self, k: int) -> np.ndarray:
        out = self.dist.draw(self.rng, int(k))
        self.sample_queries += int(k)
        self.revealed[out] = True
        return out

    def sample_values(self, k: int) -> np.ndarray:
        """D-values of k fresh samples: k sample queries followed by k evaluations."""
        atoms, prob, alias = self.dist.alias_tables()
        out = _kernels.sample_values(self.rng, atoms, prob, alias, self.dist._p, int(k), self.revealed)
        self.sample_queries += int(k)
        self.eval_queries += int(k)
        return out

    def count_below(self, k: int, thr: float) -> int:
        """Same queries as sample_values(k), reduced to the count of values below thr."""
        atoms, prob, alias = self.dist.alias_tables()
        c = _kernels.count_below(self.rng, atoms, prob, alias, self.dist._p, int(k), self.revealed,
                                 float(thr))
        self.sample_queries += int(k)
        self.eval_queries += int(k)
        return int(c)

    def bucket_counts(self, k: int, floor: float, beta: float, ell: int) -> np.ndarray:
        """Same queries as sample_values(k), reduced to a bucket histogram (index 0 unused)."""
        atoms, prob, alias = self.dist.alias_tables()
        out = _kernels.bucket_counts(self.rng, atoms, prob, alias, self.dist._p, int(k),
                                     self.revealed, float(floor), math.log(beta), int(ell))
        self.sample_queries += int(k)
        self.eval_queries += int(k)
        return out

    # eD
    def evaluate(self, v: int) -> float:
        v = self._check(v)
        self.eval_queries += 1
        return float(self.dist._p[v])

    def evaluate_many(self, vs: np.ndarray) -> np.ndarray:
        vs = np.asarray(vs, dtype=np.int64)
        if vs.size:
            if vs.min() < 1 or vs.max() > self.dist.vertex_count:
                raise UsageError("vertex id out of range")
            if self.strict and not self.revealed[vs].all():
                bad = int(vs[~self.revealed[vs]][0])
                raise LocalityError(f"query on vertex {bad} that no oracle answer revealed")
        self.eval_queries += int(vs.size)
        return self.dist._p[vs]

    def ratio(self, w1: int, w2: int):
        """D(w1)/D(w2), or UNDEFINED when D(w2) = 0. Counts as one query."""
        w1, w2 = self._check(w1), self._check(w2)
        self.eval_queries += 1
        den = self.dist._p[w2]
        if den == 0:
            return UNDEFINED
        return float(self.dist._p[w1] / den)

    # g
    def incidence(self, v: int, i: int):
        if self.graph is None:
            raise UsageError("session has no graph")
        v = self._check(v)
        self.graph_queries += 1
        u = self.graph.incidence(v, i)
        if u is not BOTTOM:
            self.revealed[u] = True
        return u

    def neighbors(self, v: int) -> tuple[int, ...]:
        """Query slots 1, 2, ... until BOTTOM or slot d; returns Γ(v)."""
        if self.graph is None:
            raise UsageError("session has no graph")
        v = self._check(v)
        nb = self.graph.neighbors(v)
        self.graph_queries += min(len(nb) + 1, self.graph.degree_bound)
        if nb:
            self.revealed[list(nb)] = True
        return nb

    def neighbors_many(self, vs: np.ndarray) -> np.ndarray:
        """Batched :meth:`neighbors`: a (len(vs), d) array, 0 standing for BOTTOM."""
        if self.graph is None:
            raise UsageError("session has no graph")
        vs = np.asarray(vs, dtype=np.int64)
        if vs.size:
            if vs.min() < 1 or vs.max() > self.dist.vertex_count:
                raise UsageError("vertex id out of range")
            if self.strict and not self.revealed[vs].all():
                bad = int(vs[~self.revealed[vs]][0])
                raise LocalityError(f"query on vertex {bad} that no oracle answer revealed")
        rows = self.graph.slot_array()[vs]
        deg = np.count_nonzero(rows, axis=1)
        self.graph_queries += int(np.minimum(deg + 1, self.graph.degree_bound).sum())
        self.revealed[rows[rows > 0]] = True
        return rows


# -- trimming -----------------------------------------------------------------------------

@dataclass(frozen=True)
class TrimmedDistribution:
    """D' = D restricted to atoms above eta/n, renormalized by ``normalizer``."""
    base: VertexDistribution
    eta: float
    bound: int
    threshold: float
    normalizer: float
    dist: VertexDistribution

    @property
    def probs(self) -> np.ndarray:
        return self.dist.probs

    def prob(self, v: int) -> float:
        return self.dist.prob(v)

    def tv_to_base(self) -> float:
        return 0.5 * math.fsum(np.abs(self.base.probs - self.dist.probs))

    def min_positive(self) -> float:
        p = self.dist.probs
        return float(p[p > 0].min())

    def sample(self, session: OracleSession, cap: int = REJECTION_CAP) -> int:
        """Draw from D' by rejection from D through the session's oracles."""
        return rejection_sample(session, self.threshold, cap)


def trim(dist: VertexDistribution, eta: float, n: int) -> TrimmedDistribution:
    if not 0 < eta < 1:
        raise UsageError(f"eta must lie in (0, 1), got {eta}")
    if n < 1:
        raise UsageError(f"n must be positive, got {n}")
    threshold = eta / n
    p = dist.probs
    kept = np.where(p > threshold, p, 0.0)
    z = math.fsum(kept)
    if z == 0:
        raise DegenerateDistribution(f"no atom exceeds eta/n = {threshold}")
    q = kept / z
    q[0] = 0.0
    # renormalize_tol absorbs the rounding of the division
    trimmed = VertexDistribution(q[1:], dist.vertex_count, renormalize_tol=1e-9)
    return TrimmedDistribution(dist, eta, n, threshold, z, trimmed)


def rejection_sample(session: OracleSession, threshold: float, cap: int = REJECTION_CAP) -> int:
    """Sample D until the evaluator reports a value above ``threshold``."""
    for _ in range(cap):
        s = session.sample()
        if session.evaluate(s) > threshold:
            return s
    raise RejectionCapExceeded(f"{cap} draws without an atom above {threshold}")


class TrimmedOracle:
    """The tester's view of D': rejection sampling plus values scaled by Z.

    ``value(v)`` returns D(v) when D(v) > eta/n and 0 otherwise, i.e. Z*D'(v).
    Walk and start-vertex probabilities are ratios, so Z never needs to be known.
    """

    def __init__(self, session: OracleSession, eta: float, n: int, cap: int = REJECTION_CAP):
        self.session = session
        self.threshold = eta / n
        self.cap = cap
        self._cache: dict[int, float] = {}

    def sample(self) -> int:
        s = rejection_sample(self.session, self.threshold, self.cap)
        return s

    def value(self, v: int) -> float:
        x = self._cache.get(v)
        if x is None:
            x = self.session.evaluate(v)
            x = x if x > self.threshold else 0.0
            self._cache[v] = x
        return x


# -- exact effective support size ------------------------------------------------------

def exact_effective_support_size(dist: VertexDistribution, eta: float) -> int:
    """Smallest k such that all but the k largest atoms carry mass <= eta."""
    if not 0 <= eta < 1:
        raise UsageError(f"eta must lie in [0, 1), got {eta}")
    vals = np.sort(dist.probs[dist.support()])
    if eta == 0:
        return int(vals.size)
    tail = np.cumsum(vals)
    stripped = int(np.searchsorted(tail, eta + NORMALIZATION_TOL, side="right"))
    return max(1, int(vals.size) - stripped)


def total_variation(p: VertexDistribution, q: VertexDistribution) -> float:
    n = max(p.vertex_count, q.vertex_count)
    a = np.zeros(n + 1)
    b = np.zeros(n + 1)
    a[:p.vertex_count + 1] = p.probs
    b[:q.vertex_count + 1] = q.probs
    return 0.5 * math.fsum(np.abs(a - b))
