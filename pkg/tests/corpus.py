"""Instance and distribution corpora shared by the acceptance checks."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from vdftester.graph_core import (BoundedDegreeGraph, InstanceFamily, disjoint_union,
                                  generate_instance)
from vdftester.vertex_dist import VertexDistribution


def gen(family, size, degree=2, seed=0, edges=()):
    return generate_instance(InstanceFamily(family, size, degree, seed, tuple(edges)))


def complete_bipartite(a: int, b: int) -> BoundedDegreeGraph:
    return BoundedDegreeGraph.from_edges(a + b, max(a, b),
                                         [(u, a + v) for u in range(1, a + 1) for v in range(1, b + 1)])


def hypercube(k: int) -> BoundedDegreeGraph:
    n = 1 << k
    edges = [(x + 1, (x ^ (1 << i)) + 1) for x in range(n) for i in range(k) if x < x ^ (1 << i)]
    return BoundedDegreeGraph.from_edges(n, k, edges)


def grid(r: int, c: int) -> BoundedDegreeGraph:
    idx = lambda i, j: i * c + j + 1  # noqa: E731
    edges = [(idx(i, j), idx(i, j + 1)) for i in range(r) for j in range(c - 1)]
    edges += [(idx(i, j), idx(i + 1, j)) for i in range(r - 1) for j in range(c)]
    return BoundedDegreeGraph.from_edges(r * c, 4, edges)


def star(k: int) -> BoundedDegreeGraph:
    return BoundedDegreeGraph.from_edges(k + 1, k, [(1, v) for v in range(2, k + 2)])


def binary_tree(n: int) -> BoundedDegreeGraph:
    return BoundedDegreeGraph.from_edges(n, 3, [(v // 2, v) for v in range(2, n + 1)])


def caterpillar(spine: int, legs: int) -> BoundedDegreeGraph:
    edges = [(v, v + 1) for v in range(1, spine)]
    nxt = spine + 1
    for v in range(1, spine + 1):
        for _ in range(legs):
            edges.append((v, nxt))
            nxt += 1
    return BoundedDegreeGraph.from_edges(nxt - 1, legs + 2, edges)


def bipartite_corpus() -> list[tuple[str, BoundedDegreeGraph]]:
    """Fifty bipartite graphs from 2 to 10^4 vertices."""
    out = []
    for n in (4, 6, 10, 50, 400, 2000):
        out.append((f"even_cycle_{n}", gen("even_cycle", n)))
    for n, d, s in [(10, 3, 0), (20, 3, 1), (30, 4, 2), (50, 3, 3), (80, 2, 4), (100, 3, 5),
                    (150, 4, 6), (200, 3, 7), (300, 3, 8), (500, 3, 9), (800, 4, 10),
                    (1000, 3, 11), (2000, 3, 12), (3000, 2, 13), (5000, 3, 14), (10000, 3, 15)]:
        out.append((f"random_bipartite_{n}_{d}_{s}", gen("random_bipartite", n, d, s)))
    for k in (2, 3, 4, 5, 6):
        out.append((f"hypercube_{k}", hypercube(k)))
    for r, c in [(2, 2), (3, 4), (5, 5), (8, 8), (10, 30)]:
        out.append((f"grid_{r}x{c}", grid(r, c)))
    for k in (4, 6, 10):
        out.append((f"torus_{k}", gen("torus", k, 4)))
    for a, b in [(1, 1), (2, 3), (3, 3), (4, 4)]:
        out.append((f"K_{a},{b}", complete_bipartite(a, b)))
    for n in (2, 15, 120):
        out.append((f"path_{n}", gen("path", n)))
    for n, s in [(12, 1), (90, 2), (700, 3)]:
        out.append((f"forest_{n}", gen("forest", n, 3, s)))
    out.append(("star_5", star(5)))
    out.append(("two_components", disjoint_union(gen("even_cycle", 8), grid(3, 3))))
    out.append(("cycle_plus_isolated", disjoint_union(gen("even_cycle", 6),
                                                      BoundedDegreeGraph(4, 2, {}))))
    out.append(("binary_tree_63", binary_tree(63)))
    out.append(("caterpillar", caterpillar(20, 2)))
    return out


def forest_corpus() -> list[tuple[str, BoundedDegreeGraph]]:
    """Fifty forests; the larger ones are unions of small trees, which keeps walk cost bounded."""
    out = [("single_vertex", BoundedDegreeGraph(1, 1, {})), ("single_edge", gen("path", 2, 1))]
    seeds = iter(range(100, 200))
    for n, d in [(5, 2), (8, 3), (12, 2), (20, 3), (25, 4), (30, 2), (40, 3), (60, 3), (80, 4),
                 (100, 3), (130, 2), (160, 3), (200, 4), (250, 3), (300, 3), (400, 2), (500, 3),
                 (600, 4), (800, 3)]:
        s = next(seeds)
        out.append((f"forest_{n}_{d}_{s}", gen("forest", n, d, s)))
    for n in (3, 5, 10, 25, 50):
        out.append((f"path_{n}", gen("path", n)))
    for k in (2, 3, 4, 7):
        out.append((f"star_{k}", star(k)))
    for n in (7, 15, 31, 127, 255):
        out.append((f"binary_tree_{n}", binary_tree(n)))
    for spine, legs in [(5, 1), (8, 1), (12, 2), (30, 1)]:
        out.append((f"caterpillar_{spine}_{legs}", caterpillar(spine, legs)))
    out.append(("matching_40", BoundedDegreeGraph.from_edges(40, 1, [(2 * i + 1, 2 * i + 2)
                                                                   for i in range(20)])))
    out.append(("many_small_trees", disjoint_union(*[binary_tree(7) for _ in range(30)])))
    out.append(("mixed_union", disjoint_union(gen("path", 40), star(3), binary_tree(15),
                                              gen("forest", 60, 3, 7))))
    out.append(("paths_40x10", disjoint_union(*[gen("path", 10)] * 40)))
    out.append(("stars_and_paths", disjoint_union(*[star(3), gen("path", 6)] * 20)))
    out.append(("paths_and_isolated", disjoint_union(gen("path", 30), BoundedDegreeGraph(10, 2, {}))))
    for k, size in [(10, 50), (20, 30), (30, 20), (50, 10), (100, 5)]:
        out.append((f"forest_{k}x{size}", disjoint_union(*[gen("forest", size, 3, s)
                                                          for s in range(k)])))
    return out


def dist_family(n: int, seed: int) -> list[tuple[str, VertexDistribution]]:
    """Five distributions over 1..n: uniform, two Zipf shapes, a heavy atom, random weights."""
    rng = np.random.default_rng(seed)
    order = (rng.permutation(n) + 1).tolist()
    out = [("uniform", VertexDistribution.uniform(n)),
           ("zipf1", VertexDistribution.zipf(n, 1.0, n, order)),
           ("zipf2", VertexDistribution.zipf(n, 2.0, n, order[::-1]))]
    heavy = order[0]
    mix = VertexDistribution.mixture([(0.7, VertexDistribution.point_mass(heavy, n)),
                                      (0.3, VertexDistribution.uniform(n))])
    out.append(("heavy_atom", mix))
    k = max(1, n // 2)
    support = order[:k]
    w = rng.dirichlet(np.full(k, 0.5))
    out.append(("sparse_dirichlet", VertexDistribution.from_weights(
        {v: float(x) + 1e-12 for v, x in zip(support, w)}, n)))
    return out


@dataclass(frozen=True)
class FarInstance:
    name: str
    graph: BoundedDegreeGraph
    dist: VertexDistribution
    eps: float
    tester: str  # bipartite | cycle_free


def _heavy_core(core: BoundedDegreeGraph, tail: int, core_mass: float) -> tuple:
    g = disjoint_union(core, gen("path", tail))
    k = core.vertex_count
    w = {v: core_mass / k for v in range(1, k + 1)}
    w.update({v: (1 - core_mass) / tail for v in range(k + 1, k + tail + 1)})
    return g, VertexDistribution.from_weights(w, g.vertex_count)


def far_instances() -> list[FarInstance]:
    """Instances at distance at least eps from the tested property (checked in the suite)."""
    u = VertexDistribution.uniform
    core, core_d = _heavy_core(gen("odd_cycle", 9), 15, 0.99)
    k4_path, k4_path_d = _heavy_core(gen("complete", 4, 3), 8, 0.9)
    items = [
        ("C5_uniform", gen("odd_cycle", 5), u(5), 0.3, "bipartite"),
        ("C3_uniform", gen("odd_cycle", 3), u(3), 0.5, "bipartite"),
        ("C7_uniform", gen("odd_cycle", 7), u(7), 0.28, "bipartite"),
        ("C11_uniform", gen("odd_cycle", 11), u(11), 0.18, "bipartite"),
        ("C5_zipf", gen("odd_cycle", 5), VertexDistribution.zipf(5, 1.0), 0.19, "bipartite"),
        ("K4_uniform", gen("complete", 4, 3), u(4), 0.5, "bipartite"),
        ("petersen_uniform", gen("petersen", 10, 3), u(10), 0.4, "bipartite"),
        ("petersen_zipf", gen("petersen", 10, 3), VertexDistribution.zipf(10, 1.0), 0.2, "bipartite"),
        ("triangles5_uniform", gen("disjoint_triangles", 5), u(15), 0.5, "bipartite"),
        ("cubic16_uniform", gen("random_d_regular", 16, 3, 1), u(16), 0.16, "bipartite"),
        ("cubic24_zipf", gen("random_d_regular", 24, 3, 2),
         VertexDistribution.zipf(24, 1.0, 24, list(range(24, 0, -1))), 0.19, "bipartite"),
        ("quartic20_uniform", gen("random_d_regular", 20, 4, 3), u(20), 0.29, "bipartite"),
        ("torus3_uniform", gen("torus", 3, 4), u(9), 0.6, "bipartite"),
        ("C9_core_path_tail", core, core_d, 0.2, "bipartite"),
        ("K4_core_path_tail", k4_path, k4_path_d, 0.55, "bipartite"),
        ("C3_cycles", gen("odd_cycle", 3), u(3), 0.5, "cycle_free"),
        ("C4_cycles", gen("even_cycle", 4), u(4), 0.5, "cycle_free"),
        ("triangles20_cycles", gen("disjoint_triangles", 20), u(60), 0.3, "cycle_free"),
        ("K4_cycles", gen("complete", 4, 3), u(4), 0.9, "cycle_free"),
        ("petersen_cycles", gen("petersen", 10, 3), u(10), 0.8, "cycle_free"),
        ("cubic100_cycles", gen("random_d_regular", 100, 3, 4), u(100), 0.6, "cycle_free"),
        ("torus6_cycles", gen("torus", 6, 4), u(36), 0.9, "cycle_free"),
        ("C5x4_zipf_cycles", disjoint_union(*[gen("odd_cycle", 5)] * 4),
         VertexDistribution.zipf(20, 1.0), 0.25, "cycle_free"),
    ]
    return [FarInstance(*it) for it in items]


def small_cyclic_graphs() -> list[tuple[str, BoundedDegreeGraph]]:
    """Graphs with cycles and at most 16 edges."""
    out = [(f"C{n}", gen("odd_cycle" if n % 2 else "even_cycle", n)) for n in range(3, 17)]
    out += [
        ("K4", gen("complete", 4, 3)),
        ("K5", gen("complete", 5, 4)),
        ("petersen", gen("petersen", 10, 3)),
        ("K3,3", complete_bipartite(3, 3)),
        ("cube", hypercube(3)),
        ("triangles5", gen("disjoint_triangles", 5)),
        ("cubic10", gen("random_d_regular", 10, 3, 1)),
        ("torus3", gen("torus", 3, 4)),
        ("theta", gen("custom", 6, 3, edges=[(1, 2), (2, 3), (3, 4), (4, 1), (1, 5), (5, 6), (6, 3)])),
        ("triangle_with_tail", gen("custom", 6, 3, edges=[(1, 2), (2, 3), (3, 1), (3, 4), (4, 5), (5, 6)])),
        ("bowtie", gen("custom", 5, 4, edges=[(1, 2), (2, 3), (3, 1), (3, 4), (4, 5), (5, 3)])),
        ("grid3x3", grid(3, 3)),
    ]
    return out


def small_forests() -> list[tuple[str, BoundedDegreeGraph]]:
    return [("path8", gen("path", 8)), ("star5", star(5)), ("binary_tree_15", binary_tree(15)),
            ("forest12", gen("forest", 12, 3, 1))]


def skewed(n: int, seed: int) -> VertexDistribution:
    rng = np.random.default_rng(seed)
    w = rng.pareto(1.0, n) + 1e-3
    return VertexDistribution.from_weights({v + 1: float(x) for v, x in enumerate(w)}, n)
