"""Sublinear testers for bipartiteness and cycle-freeness of bounded-degree
graphs under an arbitrary vertex distribution with sampling and evaluation
oracles, plus exact ground-truth distances for small instances."""

__version__ = "0.1.0"
