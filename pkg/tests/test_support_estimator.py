import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vdftester.errors import EstimateOverflow, UsageError
from vdftester.support_estimator import (EstimatorParams, _doubling, bucket_index,
                                         refined_estimate, refined_estimate_state, rough_estimate)
from vdftester.vertex_dist import OracleSession, VertexDistribution, exact_effective_support_size


def bracket(dist, eta, beta):
    lo = exact_effective_support_size(dist, beta**5 * eta)
    hi = beta**2 * exact_effective_support_size(dist, eta / beta)
    return lo, hi


class TestParams:
    @pytest.mark.parametrize("eta,beta", [(0, None), (0.25, None), (0.1, 1.0), (0.1, 2.5)])
    def test_invalid(self, eta, beta):
        with pytest.raises(UsageError):
            EstimatorParams(eta, beta)

    def test_sample_size(self):
        p = EstimatorParams(0.1)
        assert p.iteration_samples(1) == math.ceil(480 * math.log(80))
        assert p.iteration_samples(2) > p.iteration_samples(1)


class TestRough:
    def test_point_mass_halts_at_first_iteration(self):
        for seed in range(10):
            assert rough_estimate(VertexDistribution.point_mass(1), 0.1, seed) == 20

    def test_mixture_small_output(self):
        mix = VertexDistribution.mixture([(0.95, VertexDistribution.point_mass(1, 10**6)),
                                          (0.05, VertexDistribution.uniform(10**6))])
        assert all(rough_estimate(mix, 0.2, s) <= 20 / 0.2 for s in range(200))

    def test_uniform_1024_bracket(self):
        u = VertexDistribution.uniform(2**10)
        lo = exact_effective_support_size(u, 0.4)
        hi = 2 / 0.1 * exact_effective_support_size(u, 0.1)
        assert (lo, hi) == (615, 18440)
        hits = sum(lo <= rough_estimate(u, 0.1, s) <= hi for s in range(200))
        assert hits >= 180

    def test_frozen_output(self):
        # every seed halts at iteration 7: 2^7 / 0.1 = 1280
        assert rough_estimate(VertexDistribution.uniform(2**10), 0.1, seed=0) == 1280

    def test_overflow(self):
        params = EstimatorParams(0.1, max_iterations=3)
        with pytest.raises(EstimateOverflow):
            rough_estimate(VertexDistribution.uniform(10**5), 0.1, 0, params=params)

    def test_accepts_session(self):
        s = OracleSession(VertexDistribution.uniform(50), seed=1)
        rough_estimate(s, 0.1)
        assert s.sample_queries == s.eval_queries > 0


class _Scripted:
    """Session stand-in replaying fixed D-values."""

    def __init__(self, batches):
        self.batches = list(batches)
        self.i = 0

    def count_below(self, k, thr):
        out = np.resize(self.batches[self.i % len(self.batches)], k)
        self.i += 1
        return int(np.count_nonzero(out < thr))


@given(st.lists(st.lists(st.floats(0, 1), min_size=1, max_size=20), min_size=1, max_size=8),
       st.floats(0, 1))
def test_heavier_values_never_delay_halting(batches, bump):
    params = EstimatorParams(0.1, max_iterations=len(batches) + 1)
    base = [np.array(b) for b in batches]
    heavy = [np.minimum(1.0, b + bump) for b in base]
    try:
        i_base = _doubling(_Scripted(base), params, 1.0, 3.0)[0]
    except EstimateOverflow:
        i_base = math.inf
    try:
        i_heavy = _doubling(_Scripted(heavy), params, 1.0, 3.0)[0]
    except EstimateOverflow:
        i_heavy = math.inf
    assert i_heavy <= i_base


class TestBuckets:
    def test_bucket_index(self):
        beta = 1.5
        vals = np.array([1.0, 0.9, 1 / 1.5, 0.5, 1 / 1.5**3])
        assert bucket_index(vals, beta).tolist() == [1, 1, 1, 2, 3]

    @given(st.floats(1e-9, 1.0), st.floats(1.05, 2.0))
    def test_bucket_bounds(self, v, beta):
        i = int(bucket_index(np.array([v]), beta)[0])
        assert i >= 1
        assert v < beta ** (-i + 1) * (1 + 1e-9) or i == 1
        assert v >= beta ** (-i) * (1 - 1e-9)


class TestRefined:
    def test_two_atoms(self):
        d = VertexDistribution([0.5, 0.5])
        assert bracket(d, 0.1, 1.5) == (1, 4.5)
        assert {refined_estimate(d, 0.1, 1.5, s) for s in range(50)} == {2}

    def test_state_invariants(self):
        st_ = refined_estimate_state(VertexDistribution.uniform(4096), 0.1, 1.5, seed=3)
        beta, eta1, eta2 = 1.5, 1.5**3 * 0.1, 1.5**4 * 0.1
        assert st_.ell == math.ceil(math.log(st_.rough / ((beta - 1) * eta1), beta) - 1e-9)
        assert all(st_.bucket_mass[i] >= (beta - 1) * eta2 / st_.ell for i in st_.kept_buckets)
        assert st_.heavy_threshold == pytest.approx((beta - 1) * eta1 / st_.rough)
        assert st_.queries == st_.sample_queries + st_.eval_queries

    def test_uniform_4096(self):
        d = VertexDistribution.uniform(4096)
        lo, hi = bracket(d, 0.1, 1.5)
        hits = sum(lo <= refined_estimate(d, 0.1, 1.5, s) <= hi for s in range(200))
        assert hits >= 180

    def test_zipf_10k(self):
        d = VertexDistribution.zipf(10**4, 1.0)
        lo, hi = bracket(d, 0.1, 1.25)
        hits = sum(lo <= refined_estimate(d, 0.1, 1.25, s) <= hi for s in range(200))
        assert hits >= 180

    def test_deterministic(self):
        d = VertexDistribution.zipf(500, 0.8)
        a = refined_estimate_state(d, 0.1, 1.5, seed=9)
        b = refined_estimate_state(d, 0.1, 1.5, seed=9)
        assert a == b

    def test_needs_beta(self):
        with pytest.raises(UsageError):
            refined_estimate_state(VertexDistribution.uniform(4), 0.1, 1.5,
                                   params=EstimatorParams(0.1))
