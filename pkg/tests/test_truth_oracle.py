import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from strategies import distributions, graph_and_dist, graphs
from vdftester.cycle_tester import EQ, NEQ, ForcedLabeler
from vdftester.errors import CapError, ScaleError, UsageError
from vdftester.graph_core import BoundedDegreeGraph, InstanceFamily, generate_instance
from vdftester.truth_oracle import (bipartite_distance, build_mental_multigraph,
                                    cyclefree_distance, edge_weight, edge_weights,
                                    exhaustive_cyclefree_distance, gen2col_distance,
                                    multigraph_distance_check, reduction_gap_experiment,
                                    total_weight, walk_equivalence_check)
from vdftester.vertex_dist import VertexDistribution, trim

C3 = generate_instance(InstanceFamily("odd_cycle", 3))
C4 = generate_instance(InstanceFamily("even_cycle", 4))
C5 = generate_instance(InstanceFamily("odd_cycle", 5))
PATH3 = generate_instance(InstanceFamily("path", 3))
STAR = BoundedDegreeGraph.from_edges(4, 3, [(1, 2), (1, 3), (1, 4)])


def _brute_force_bipartite(g, dist):
    """Independent reference: enumerate all 2^n colorings in pure Python."""
    w = edge_weights(g, dist)
    best = math.inf
    for bits in itertools.product((0, 1), repeat=g.vertex_count):
        best = min(best, math.fsum(w[e] for e in g.edges() if bits[e[0] - 1] == bits[e[1] - 1]))
    return best


class TestBipartite:
    def test_bipartite_zero(self):
        rep = bipartite_distance(C4, VertexDistribution.uniform(4))
        assert rep.distance == 0 and rep.removed == [] and rep.method == "bruteforce"

    def test_c5(self):
        rep = bipartite_distance(C5, VertexDistribution.uniform(5))
        assert rep.distance == pytest.approx(0.4)
        assert len(rep.removed) == 1
        col = rep.coloring
        mono = [(u, v) for u, v in C5.edges() if col[u] == col[v]]
        assert mono == rep.removed

    def test_path(self):
        assert bipartite_distance(PATH3, VertexDistribution([0.8, 0.1, 0.1])).distance == 0

    def test_cap(self):
        g = generate_instance(InstanceFamily("path", 25))
        with pytest.raises(CapError):
            bipartite_distance(g, VertexDistribution.uniform(25))

    @given(graph_and_dist(max_n=9))
    def test_matches_reference(self, gd):
        g, d = gd
        rep = bipartite_distance(g, d)
        assert rep.distance == pytest.approx(_brute_force_bipartite(g, d), abs=1e-12)
        assert rep.distance <= total_weight(g, d) + 1e-12
        assert (rep.distance == 0) == (_brute_force_bipartite(g, d) == 0)

    def test_edge_weight(self):
        assert edge_weight(PATH3, VertexDistribution([0.8, 0.1, 0.1]), 1, 2) == pytest.approx(0.9)


class TestGen2col:
    @given(graph_and_dist(max_n=10))
    def test_all_eq_zero(self, gd):
        g, d = gd
        assert gen2col_distance(g, ForcedLabeler(EQ), d).distance == 0

    @given(graph_and_dist(max_n=10))
    def test_all_neq_equals_bipartite(self, gd):
        g, d = gd
        a = bipartite_distance(g, d)
        b = gen2col_distance(g, ForcedLabeler(NEQ), d)
        assert a.distance == b.distance and a.removed == b.removed

    def test_c3_labels(self):
        labels = {(1, 2): EQ, (2, 3): EQ, (1, 3): NEQ}
        assert gen2col_distance(C3, labels, VertexDistribution.uniform(3)).distance == pytest.approx(2 / 3)


class TestCycleFree:
    def test_forest_zero(self):
        g = generate_instance(InstanceFamily("forest", 30, 3, seed=2))
        rep = cyclefree_distance(g, VertexDistribution.uniform(30))
        assert rep.distance == 0 and rep.method == "exact-forest"

    def test_c3(self):
        assert cyclefree_distance(C3, VertexDistribution.uniform(3)).distance == pytest.approx(2 / 3)

    def test_removed_leaves_forest(self):
        g = generate_instance(InstanceFamily("random_d_regular", 50, 3, seed=1))
        rep = cyclefree_distance(g, VertexDistribution.zipf(50, 1.0))
        kept = [e for e in g.edges() if e not in set(rep.removed)]
        assert BoundedDegreeGraph.from_edges(50, 3, kept).is_forest()
        assert len(rep.removed) == g.edge_count - 49  # connected cubic graph

    def test_tie_break_is_canonical(self):
        rep = cyclefree_distance(C3, VertexDistribution.uniform(3))
        assert rep.removed == [(2, 3)]

    @given(graph_and_dist(max_n=9, max_d=4))
    def test_exhaustive_agreement(self, gd):
        g, d = gd
        if g.edge_count > 16:
            return
        assert cyclefree_distance(g, d).distance == exhaustive_cyclefree_distance(g, d).distance

    def test_exhaustive_cap(self):
        g = generate_instance(InstanceFamily("random_d_regular", 12, 3, seed=0))
        with pytest.raises(CapError):
            exhaustive_cyclefree_distance(g, VertexDistribution.uniform(12))

    @given(graph_and_dist(max_n=9), st.randoms(use_true_random=False))
    def test_relabeling_invariance(self, gd, rnd):
        g, d = gd
        perm = list(range(1, g.vertex_count + 1))
        rnd.shuffle(perm)
        g2 = g.relabel(perm)
        q = np.zeros(g.vertex_count)
        for v in g.vertices():
            q[perm[v - 1] - 1] = d.prob(v)
        d2 = VertexDistribution(q, renormalize_tol=1e-9)
        for fn in (bipartite_distance, cyclefree_distance):
            assert fn(g, d).distance == pytest.approx(fn(g2, d2).distance, abs=1e-12)


class TestMentalMultigraph:
    def test_multiplicity(self):
        g = BoundedDegreeGraph.from_edges(3, 2, [(1, 2), (2, 3)])
        d = VertexDistribution([0.3, 0.2, 0.5])
        mg = build_mental_multigraph(g, d, 1000)
        assert mg.m(1, 2) == 500 and mg.m(2, 1) == 500 and mg.m(2, 3) == 700

    def test_isolated_excluded(self):
        g = BoundedDegreeGraph.from_edges(5, 2, [(1, 2), (4, 5)])
        d = VertexDistribution({1: 0.5, 2: 0.5}, 5)
        mg = build_mental_multigraph(g, d, 100)
        assert mg.vertices == [1, 2] and mg.m(4, 5) == 0

    def test_scale_error(self):
        with pytest.raises(ScaleError):
            build_mental_multigraph(C5, VertexDistribution.uniform(5), 40)

    def test_total_multiplicity(self):
        g = generate_instance(InstanceFamily("random_d_regular", 40, 3, seed=6))
        d = trim(VertexDistribution.zipf(40, 1.0), 0.1, 40)
        N = 10**5
        mg = build_mental_multigraph(g, d, N)
        avg = math.fsum(g.degree(w) * d.prob(w) for w in g.vertices())
        assert 0.9 * N * avg <= mg.edge_total <= 1.1 * N * avg

    @given(st.integers(3, 20).flatmap(lambda n: st.tuples(
        graphs(min_n=n, max_n=n), distributions(n))), st.sampled_from([10**3, 10**5]))
    def test_invariants(self, gd, N):
        g, d = gd
        t = trim(d, 0.1, g.vertex_count)
        rho = t.min_positive()
        if N * rho < 10:
            return
        mg = build_mental_multigraph(g, t, N)
        for e, m in mg.multiplicity.items():
            assert m == math.floor((t.prob(e[0]) + t.prob(e[1])) * N + 0.5)
            if m:
                assert m >= round(rho * N) - 1
        assert set(mg.vertices) == {v for v in g.vertices()
                                    if any(mg.m(v, u) for u in g.neighbors(v))}
        assert len(mg.vertices) <= (g.degree_bound + 1) / rho

    def test_step_distribution_requires_vertex(self):
        mg = build_mental_multigraph(C5, VertexDistribution.uniform(5), 100)
        assert sum(mg.step_distribution(1).values()) == pytest.approx(1)
        lonely = build_mental_multigraph(BoundedDegreeGraph.from_edges(3, 2, [(1, 2)]),
                                         VertexDistribution({1: 0.5, 2: 0.5}, 3), 100)
        with pytest.raises(UsageError):
            lonely.step_distribution(3)


class TestWalkEquivalence:
    def test_star(self):
        d = VertexDistribution([0.4, 0.2, 0.2, 0.2])
        assert walk_equivalence_check(STAR, trim(d, 0.1, 4), 10**6, 1, 10**5, seed=0) <= 0.02

    def test_c4_uniform(self):
        d = trim(VertexDistribution.uniform(4), 0.1, 4)
        assert walk_equivalence_check(C4, d, 1000, 2, 10**5, seed=1) <= 0.02

    def test_adversarial_skew(self):
        rho = 0.05
        g = BoundedDegreeGraph.from_edges(3, 2, [(1, 2), (1, 3)])
        d = trim(VertexDistribution([rho, 0.9, 1 - 0.9 - rho]), 0.1, 3)
        N = 10**4
        mg = build_mental_multigraph(g, d, N)
        exact = (d.prob(1) + d.prob(2)) / (2 * d.prob(1) + d.prob(2) + d.prob(3))
        ratio = mg.step_distribution(1)[2]
        assert abs(exact - ratio) <= 1 / (rho * N)
        assert walk_equivalence_check(g, d, N, 1, 10**5, seed=2) <= 1 / (rho * N) + 0.01

    def test_scale_error(self):
        with pytest.raises(ScaleError):
            walk_equivalence_check(STAR, VertexDistribution([0.4, 0.2, 0.2, 0.2]), 10, 1, 100)


class TestClaim21:
    @pytest.mark.parametrize("graph,dist", [
        (C5, VertexDistribution.uniform(5)),
        (C3, VertexDistribution([0.5, 0.3, 0.2])),
        (generate_instance(InstanceFamily("petersen", 10, 3)), VertexDistribution.zipf(10, 1.0)),
        (generate_instance(InstanceFamily("disjoint_triangles", 3)), VertexDistribution.uniform(9)),
    ])
    def test_lower_bound(self, graph, dist):
        t = trim(dist, 0.1, graph.vertex_count)
        N = max(100, math.ceil(10 / t.min_positive()))
        lower, removed = multigraph_distance_check(graph, t, N)
        assert lower <= removed


class TestReductionGap:
    def test_c3(self):
        g = reduction_gap_experiment(C3, VertexDistribution.uniform(3), 2 / 3)
        assert g.labelings == 8
        assert g.fraction_positive == 0.5
        assert g.fraction_far == 0.5
        assert sorted(g.histogram.values()) == [4, 4]

    def test_c5(self):
        g = reduction_gap_experiment(C5, VertexDistribution.uniform(5), 0.4)
        assert g.labelings == 32 and g.fraction_positive == 0.5 and g.fraction_far == 0.5

    def test_forest(self):
        f = generate_instance(InstanceFamily("forest", 12, 3, seed=1))
        g = reduction_gap_experiment(f, VertexDistribution.uniform(12), 0.3)
        assert g.fraction_positive == 0 and g.fraction_far == 0

    def test_matches_gen2col_bruteforce(self):
        g = generate_instance(InstanceFamily("custom", 5, 4, edges=((1, 2), (2, 3), (3, 1), (3, 4),
                                                                    (4, 5), (5, 3))))
        d = VertexDistribution([0.3, 0.1, 0.2, 0.25, 0.15])
        stats = reduction_gap_experiment(g, d, 0.3)
        edges = g.edges()
        dists = []
        for bits in itertools.product((0, 1), repeat=len(edges)):
            labels = {e: (NEQ if b else EQ) for e, b in zip(edges, bits)}
            dists.append(gen2col_distance(g, labels, d).distance)
        far = sum(x >= stats.threshold - 1e-12 for x in dists) / len(dists)
        assert stats.fraction_far == far
        assert stats.fraction_positive == sum(x > 1e-12 for x in dists) / len(dists)

    def test_sampled_mode(self):
        g = generate_instance(InstanceFamily("random_d_regular", 12, 3, seed=0))
        with pytest.raises(CapError):
            reduction_gap_experiment(g, VertexDistribution.uniform(12), 0.3)
        s = reduction_gap_experiment(g, VertexDistribution.uniform(12), 0.3, sampled=True,
                                     samples=1000, seed=1)
        assert s.mode == "sampled" and s.labelings == 1000 and 0 < s.fraction_far <= 1
        with pytest.raises(UsageError):
            reduction_gap_experiment(g, VertexDistribution.uniform(12), 0.3, sampled=True,
                                     samples=10)
