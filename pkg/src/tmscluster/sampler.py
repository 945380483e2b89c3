"""Finite-shot estimation of central moments from Husimi samples.

The Husimi distribution of a Gaussian state is an ordinary complex Gaussian
whose moments are the anti-normally ordered operator moments, so it can be
sampled exactly. An operator product is rewritten in anti-normal order
(programmatically, via partial contractions ``a_m^dag ... a_m -> -1``) and
the resulting polynomial in ``alpha, alpha*`` is averaged over samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations, product

import numpy as np

from .moments import central_moment
from .observables import MomentQuery, QuadraticObservable
from .state import GaussianState, PhysicalityError
from .wick import ANN, DAG, ordered_moment

MAX_SAMPLED_OBSERVABLES = 4  # total degree 8
DEFAULT_BLOCKS = 50


class UnsupportedDegreeError(ValueError):
    pass


@dataclass(frozen=True)
class SampleBatch:
    alpha: np.ndarray  # (shots, M) complex
    seed: int
    fingerprint: str

    @property
    def shots(self) -> int:
        return self.alpha.shape[0]


@dataclass(frozen=True)
class EstimateReport:
    estimate: float
    stderr: float
    shots: int

    @property
    def z(self) -> float:
        return self.estimate / self.stderr if self.stderr > 0 else math.inf

    def as_dict(self) -> dict:
        return {"estimate": self.estimate, "stderr": self.stderr, "shots": self.shots, "z": self.z}


def husimi_covariance(s: GaussianState) -> np.ndarray:
    """Covariance of ``(Re alpha, Im alpha)`` under the Husimi distribution."""
    I = np.eye(s.M)
    P = s.N.T + I  # E[alpha_m conj(alpha_n)] = <a_m a_n^dag>
    A = s.A  # E[alpha_m alpha_n]
    rr = (A.real + P.real) / 2
    ii = (P.real - A.real) / 2
    ri = (A.imag - P.imag) / 2
    return np.block([[rr, ri], [ri.T, ii]])


def sample_state(s: GaussianState, shots: int, seed: int) -> SampleBatch:
    if shots < 0:
        raise ValueError("shots must be non-negative")
    if not s.is_physical():
        raise PhysicalityError("cannot sample an unphysical state")
    cov = husimi_covariance(s)
    w, V = np.linalg.eigh((cov + cov.T) / 2)
    scale = V * np.sqrt(np.clip(w, 0.0, None))
    rng = np.random.Generator(np.random.Philox(seed))
    x = rng.standard_normal((shots, 2 * s.M)) @ scale.T
    alpha = x[:, : s.M] + 1j * x[:, s.M :]
    return SampleBatch(alpha, seed, s.fingerprint())


# ---------------------------------------------------------------- ordering


def antinormal_polynomial(observables) -> dict:
    """Anti-normally ordered form of the ordered product ``Q_1 ... Q_q``.

    Returns ``{monomial: coefficient}`` where a monomial is a sorted tuple of
    ``(leg, mode)`` factors; ``DAG`` stands for ``conj(alpha)`` and ``ANN`` for
    ``alpha``. Moving ``a_n`` left of an earlier ``a_m^dag`` costs a
    contraction ``-delta_mn``; other pairs already sit in anti-normal order.
    """
    poly: dict = {}
    term_lists = [list(o.terms()) for o in observables]
    for combo in product(*term_lists):
        coef = 1 + 0j
        ops = []
        for c, m, n in combo:
            coef *= c
            ops += [(DAG, m), (ANN, n)]
        for contracted, sign in _partial_contractions(ops):
            rest = tuple(sorted(op for k, op in enumerate(ops) if k not in contracted))
            poly[rest] = poly.get(rest, 0) + coef * sign
    return {k: v for k, v in poly.items() if v != 0}


def _partial_contractions(ops):
    """Yield ``(used positions, factor)`` over sets of disjoint contractions."""
    pairs = [
        (i, j)
        for i in range(len(ops))
        for j in range(i + 1, len(ops))
        if ops[i][0] == DAG and ops[j][0] == ANN and ops[i][1] == ops[j][1]
    ]

    def rec(start, used, factor):
        yield frozenset(used), factor
        for k in range(start, len(pairs)):
            i, j = pairs[k]
            if i in used or j in used:
                continue
            yield from rec(k + 1, used | {i, j}, -factor)

    yield from rec(0, frozenset(), 1)


def _evaluate(poly: dict, alpha: np.ndarray) -> np.ndarray:
    out = np.zeros(alpha.shape[0], dtype=complex)
    conj = alpha.conj()
    for mono, coef in poly.items():
        val = np.full(alpha.shape[0], coef, dtype=complex)
        for leg, mode in mono:
            val = val * (conj[:, mode] if leg == DAG else alpha[:, mode])
        out += val
    return out.real


def _central_from_means(means: dict, q: int) -> np.ndarray:
    """Plug-in central moment from subset means ``means[subset]``."""
    full = tuple(range(q))
    total = 0.0
    for k in range(q + 1):
        for sub in combinations(full, k):
            rest = tuple(i for i in full if i not in sub)
            term = means[rest]
            for i in sub:
                term = term * means[(i,)]
            total = total + (-1) ** k * term
    return total


def estimate_query(batch: SampleBatch, query, blocks: int = DEFAULT_BLOCKS) -> EstimateReport:
    """Plug-in central moment with a delete-one-block jackknife standard error."""
    if not isinstance(query, MomentQuery):
        query = MomentQuery(tuple(query))
    obs = query.observables
    q = len(obs)
    if q > MAX_SAMPLED_OBSERVABLES:
        raise UnsupportedDegreeError(f"sampled queries support total degree <= {2 * MAX_SAMPLED_OBSERVABLES}")
    if max(max(o.modes) for o in obs) >= batch.alpha.shape[1]:
        raise ValueError("query touches modes outside the sampled state")
    shots = batch.shots
    if shots < 2:
        raise ValueError("need at least two shots for an error estimate")
    blocks = max(2, min(blocks, shots))
    edges = np.linspace(0, shots, blocks + 1).astype(int)
    sizes = np.diff(edges)
    sums, totals = {}, {}
    for k in range(q + 1):
        for sub in combinations(range(q), k):
            if k == 0:
                vals = np.ones(shots)
            else:
                vals = _evaluate(antinormal_polynomial([obs[i] for i in sub]), batch.alpha)
            bs = np.add.reduceat(vals, edges[:-1])
            sums[sub] = bs
            totals[sub] = bs.sum()
    full_means = {k: totals[k] / shots for k in totals}
    if not query.centered:
        estimate = full_means[tuple(range(q))]
        loo = {k: (totals[k] - sums[k]) / (shots - sizes) for k in sums}
        reps = loo[tuple(range(q))]
    else:
        estimate = _central_from_means(full_means, q)
        loo = {k: (totals[k] - sums[k]) / (shots - sizes) for k in sums}
        reps = _central_from_means(loo, q)
    var = (blocks - 1) / blocks * np.sum((reps - reps.mean()) ** 2)
    return EstimateReport(float(estimate), float(np.sqrt(var)), shots)


# ---------------------------------------------------------------- planning


def estimator_variance(s: GaussianState, query) -> float:
    """Per-shot asymptotic variance of the plug-in central-moment estimator.

    Uses the influence function ``prod c_j - sum_j E[prod_{i!=j} c_i] c_j``
    with ``c_j`` the centered Husimi quadratics, evaluated exactly by the
    Wick kernel with commuting (Husimi) contractions.
    """
    obs = tuple(query.observables if isinstance(query, MomentQuery) else query)
    q = len(obs)
    if 2 * q > 12:
        raise UnsupportedDegreeError("variance needs moments of twice the query order (at most 12 observables)")

    def cl(items):
        return ordered_moment(s.N, s.A, tuple(items), centered=True, classical=True).real

    target = cl(obs)
    kappa = [cl([o for i, o in enumerate(obs) if i != j]) if q > 1 else 1.0 for j in range(q)]
    var = cl([o for o in obs for _ in range(2)]) - target**2
    for j in range(q):
        var -= 2 * kappa[j] * cl(obs + (obs[j],))
        for k in range(q):
            var += kappa[j] * kappa[k] * cl((obs[j], obs[k]))
    return max(var, 0.0)


def shots_to_resolve(s: GaussianState, query, z: float = 5.0, atol: float = 1e-14) -> float:
    """Smallest shot count whose expected ``|estimate / stderr|`` reaches ``z``.

    Returns ``math.inf`` when the exact moment vanishes.
    """
    target = central_moment(s, query)
    if abs(target) <= atol:
        return math.inf
    var = estimator_variance(s, query)
    return float(max(2, math.ceil(z * z * var / target**2)))
