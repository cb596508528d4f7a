"""Hypothesis strategies shared by the test modules."""
from hypothesis import strategies as st

from vdftester.graph_core import BoundedDegreeGraph
from vdftester.vertex_dist import VertexDistribution


@st.composite
def graphs(draw, max_n=12, max_d=4, min_n=1):
    n = draw(st.integers(min_n, max_n))
    d = draw(st.integers(1, max_d))
    deg = [0] * (n + 1)
    edges = []
    pairs = [(u, v) for u in range(1, n + 1) for v in range(u + 1, n + 1)]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=len(pairs))) if pairs else []
    for u, v in chosen:
        if deg[u] < d and deg[v] < d:
            edges.append((u, v))
            deg[u] += 1
            deg[v] += 1
    return BoundedDegreeGraph.from_edges(n, d, edges)


@st.composite
def distributions(draw, n, min_support=1):
    weights = draw(st.lists(st.one_of(st.just(0.0), st.floats(0.01, 10.0)), min_size=n, max_size=n))
    if sum(1 for w in weights if w > 0) < min_support:
        weights[0] = 1.0
    return VertexDistribution.from_weights({v + 1: w for v, w in enumerate(weights) if w > 0}, n)


@st.composite
def graph_and_dist(draw, max_n=12, max_d=4):
    g = draw(graphs(max_n=max_n, max_d=max_d))
    return g, draw(distributions(g.vertex_count))
