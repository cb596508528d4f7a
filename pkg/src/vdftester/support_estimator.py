"""Estimating the effective support size of D from sample and evaluation queries."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EstimateOverflow, UsageError
from .vertex_dist import OracleSession, VertexDistribution

MAX_ITERATIONS = 64


@dataclass(frozen=True)
class EstimatorParams:
    eta: float
    beta: float | None = None
    sample_constant: float = 48.0  # m = C/eta * ln(20 (i+1)^2)
    t: int = 7
    bucket_constant: float = 1.0
    heavy_constant: float = 64.0
    max_iterations: int = MAX_ITERATIONS

    def __post_init__(self):
        if not 0 < self.eta < 0.25:
            raise UsageError(f"eta must lie in (0, 1/4), got {self.eta}")
        if self.beta is not None and not 1 < self.beta <= 2:
            raise UsageError(f"beta must lie in (1, 2], got {self.beta}")

    def iteration_samples(self, i: int) -> int:
        return math.ceil(self.sample_constant / self.eta * math.log(20 * (i + 1) ** 2))


@dataclass
class EstimatorState:
    estimate: int
    iterations: int
    rough: int
    ell: int = 0
    heavy_threshold: float = 0.0
    bucket_mass: dict[int, float] = field(default_factory=dict)
    kept_buckets: list[int] = field(default_factory=list)
    bucket_sizes: dict[int, float] = field(default_factory=dict)
    light_fraction: float | None = None
    disposed: bool = False
    sample_queries: int = 0
    eval_queries: int = 0

    @property
    def queries(self) -> int:
        return self.sample_queries + self.eval_queries


def _session(oracle, seed) -> OracleSession:
    if isinstance(oracle, OracleSession):
        return oracle
    if isinstance(oracle, VertexDistribution):
        return OracleSession(oracle, seed=seed)
    raise UsageError(f"expected an OracleSession or VertexDistribution, got {type(oracle).__name__}")


def _doubling(session: OracleSession, params: EstimatorParams, light_scale: float,
              halt_factor: float) -> tuple[int, int]:
    """Return (iteration, estimate) of the doubling search.

    Iteration i counts samples whose D-value is below ``light_scale * eta / 2**i``
    and halts once that count is at most ``halt_factor * eta * m``.
    """
    eta = params.eta
    for i in range(1, params.max_iterations + 1):
        m = params.iteration_samples(i)
        light = session.count_below(m, light_scale * eta / 2.0**i)
        if light <= halt_factor * eta * m:
            # 1e-9 absorbs float error when 2^i / eta is an integer
            return i, max(1, math.ceil(2.0**i / eta - 1e-9))
    raise EstimateOverflow(f"no halt within {params.max_iterations} iterations at eta={eta}")


def rough_estimate(oracle, eta: float, seed=None, *, params: EstimatorParams | None = None) -> int:
    """Doubling estimate of the effective support size.

    With probability at least 2/3 the output lies between half the minimal
    4*eta-effective support size and 2/eta times the minimal eta-effective one.
    """
    params = params or EstimatorParams(eta)
    session = _session(oracle, seed)
    return _doubling(session, params, 1.0, 3.0)[1]


def bucket_index(value: np.ndarray, beta: float) -> np.ndarray:
    """Bucket i holds values in [beta^-i, beta^(-i+1)); 1.0 goes to bucket 1."""
    with np.errstate(divide="ignore"):
        idx = np.ceil(-np.log(value) / math.log(beta) - 1e-12)
    return np.maximum(idx, 1).astype(np.int64)


def refined_estimate_state(oracle, eta: float, beta: float, seed=None, *,
                           params: EstimatorParams | None = None) -> EstimatorState:
    """Bucketed estimate plus every intermediate quantity (see refined_estimate)."""
    params = params or EstimatorParams(eta, beta)
    if params.beta is None:
        raise UsageError("refined estimation needs beta")
    beta = params.beta
    session = _session(oracle, seed)
    s0, e0 = session.sample_queries, session.eval_queries

    iters, n_hat = _doubling(session, params, beta - 1.0, beta**2)

    eta1 = beta**3 * eta
    eta2 = beta**4 * eta
    heavy = (beta - 1.0) * eta1 / n_hat
    ell = max(1, math.ceil(math.log(n_hat / ((beta - 1.0) * eta1)) / math.log(beta) - 1e-9))

    s = math.ceil(params.bucket_constant * params.t * ell / ((beta - 1.0) ** 2 * eta1))
    counts = session.bucket_counts(s, heavy, beta, ell)
    mass = {i: counts[i] / s for i in range(1, ell + 1) if counts[i]}
    keep = sorted(i for i, w in mass.items() if w >= (beta - 1.0) * eta2 / ell)
    sizes = {i: mass[i] * beta ** (i - 0.5) for i in keep}

    extra = math.ceil(params.heavy_constant / eta)
    light = session.count_below(extra, heavy) / extra
    disposed = light < eta * (beta + 1.0 / beta) / 2.0
    if disposed:
        # drop the lightest elements until the retained estimate is at most 1 - eta
        excess = sum(mass[i] for i in keep) - (1.0 - eta)
        for i in sorted(keep, reverse=True):
            if excess <= 0:
                break
            cut = min(excess, mass[i])
            sizes[i] -= cut * beta ** (i - 0.5)
            excess -= cut

    estimate = max(1, math.ceil(math.fsum(sizes.values()) - 1e-9))
    return EstimatorState(
        estimate=estimate, iterations=iters, rough=n_hat, ell=ell, heavy_threshold=heavy,
        bucket_mass=mass, kept_buckets=keep, bucket_sizes=sizes, light_fraction=light,
        disposed=disposed, sample_queries=session.sample_queries - s0,
        eval_queries=session.eval_queries - e0)


def refined_estimate(oracle, eta: float, beta: float, seed=None, *,
                     params: EstimatorParams | None = None) -> int:
    """With probability at least 2/3, a value between the minimal beta^5*eta-effective
    support size and beta^2 times the minimal eta/beta-effective support size."""
    return refined_estimate_state(oracle, eta, beta, seed, params=params).estimate
