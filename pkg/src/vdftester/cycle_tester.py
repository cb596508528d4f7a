"""Cycle-freeness tester: label edges eq/neq at random and test the labeled
graph for a legal 2-coloring.

A forest admits a legal 2-coloring under every labeling, so forests are
never rejected. A graph far from cycle-free stays far from 2-colorable
under a constant fraction of labelings.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _kernels
from .errors import UsageError
from .graph_core import BoundedDegreeGraph, canonical_edge
from .walk_tester import (DEFAULT_SCHEDULE, Schedule, Verdict, _check_eps, _session_for,
                          estimate_support_bound, run_with_bound)

EQ = "eq"
NEQ = "neq"

DEFAULT_KAPPA = 1.0 / 8
DEFAULT_REPETITIONS = 4


def key_from_seed(seed) -> int:
    """64-bit hashing key derived from any seed numpy accepts."""
    return int(np.random.SeedSequence(seed).generate_state(1, np.uint64)[0])


@dataclass
class EdgeLabeler:
    """Uniform random labeling tau: E -> {eq, neq}, computed lazily.

    A label is a keyed hash of the canonical edge, so it is the same from
    both endpoints and never changes; the cache only records what was issued.
    """
    key: int
    cache: dict[tuple[int, int], str] = field(default_factory=dict, repr=False)

    @classmethod
    def from_seed(cls, seed) -> "EdgeLabeler":
        return cls(key_from_seed(seed))

    @property
    def hash_key(self) -> int:
        return self.key

    def parity(self, u: int, v: int) -> int:
        return int(_kernels.hash_label(np.uint64(self.key), int(u), int(v)))

    def label(self, u: int, v: int) -> str:
        e = canonical_edge(int(u), int(v))
        lab = self.cache.get(e)
        if lab is None:
            lab = NEQ if self.parity(*e) else EQ
            self.cache[e] = lab
        return lab

    __call__ = label


@dataclass(frozen=True)
class ForcedLabeler:
    """Every edge gets the same label (all-neq is plain bipartiteness)."""
    value: str = NEQ

    def __post_init__(self):
        if self.value not in (EQ, NEQ):
            raise UsageError(f"label must be eq or neq, got {self.value!r}")

    def __call__(self, u: int, v: int) -> str:
        return self.value

    def parity(self, u: int, v: int) -> int:
        return 1 if self.value == NEQ else 0


def edge_label(labeler, u: int, v: int) -> str:
    return labeler(u, v)


@dataclass(frozen=True)
class CycleParams:
    kappa: float = DEFAULT_KAPPA
    repetitions: int = DEFAULT_REPETITIONS

    def inner_eps(self, eps: float, n: int) -> float:
        return self.kappa * eps / math.log2(n + 2)


def test_cycle_free(graph: BoundedDegreeGraph, dist, eps: float, seed=None, *,
                    kappa: float = DEFAULT_KAPPA, repetitions: int = DEFAULT_REPETITIONS,
                    support_bound: int | None = None,
                    labeler_factory: Callable[[int], object] | None = None,
                    schedule: Schedule = DEFAULT_SCHEDULE,
                    stop_when_closed: bool = True) -> Verdict:
    """Reject iff some repetition finds an explored subgraph with no legal
    2-coloring under that repetition's fresh random labeling.

    ``labeler_factory(r)`` overrides the labeling of repetition r (e.g. a
    ForcedLabeler for regression checks). ``support_bound`` skips estimation.
    """
    _check_eps(eps)
    if repetitions < 1:
        raise UsageError("repetitions must be positive")
    if kappa <= 0:
        raise UsageError("kappa must be positive")
    t0 = time.perf_counter()
    session = _session_for(graph, dist, seed)
    n = support_bound if support_bound is not None else estimate_support_bound(session, eps)
    inner = CycleParams(kappa, repetitions).inner_eps(eps, n)

    if labeler_factory is None:
        keys = [int(k) for k in session.rng.integers(0, 2**64, size=repetitions, dtype=np.uint64)]

        def labeler_factory(r: int):
            return EdgeLabeler(keys[r])

    return run_with_bound(session, inner, n, labels_for_repetition=labeler_factory,
                          schedule=schedule, stop_when_closed=stop_when_closed,
                          repetitions=repetitions, started=t0)


test_cycle_free.__test__ = False
