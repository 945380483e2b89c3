"""Exact means, moments, correlations and stabilizer checks on Gaussian states."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, product
from typing import Mapping, Sequence

import numpy as np

from .observables import MomentQuery, QuadraticObservable, stokes
from .state import GaussianState
from .wick import MAX_QUERY, ordered_moment

IMAG_TOL = 1e-10
MAX_TENSOR_MODES = 6

# Stokes index -> Pauli matrix used for the tensor rendering (1->z, 2->x, 3->y)
PAULI = [
    np.eye(2, dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
]


class UndefinedCorrelationError(ValueError):
    """A normalized correlation was requested for an observable with zero variance."""


def _as_query(query, centered=True) -> MomentQuery:
    if isinstance(query, MomentQuery):
        return query
    return MomentQuery(tuple(query), centered=centered)


def _check_dims(s: GaussianState, observables: Sequence[QuadraticObservable]) -> None:
    for o in observables:
        if max(o.modes) >= s.M:
            raise ValueError(f"observable {o.label} touches mode {max(o.modes)} of a {s.M}-mode state")


def _real(value: complex, scale: float = 1.0) -> float:
    if abs(value.imag) > IMAG_TOL * max(1.0, scale, abs(value.real)):
        raise ValueError(f"moment has imaginary residue {value.imag:.3e}; the product is not Hermitian")
    return float(value.real)


def _moment(s: GaussianState, observables, centered: bool, cap: int) -> float:
    observables = tuple(observables)
    _check_dims(s, observables)
    return _real(ordered_moment(s.N, s.A, observables, centered=centered, cap=cap))


def expectation(s: GaussianState, Q: QuadraticObservable) -> float:
    _check_dims(s, [Q])
    return _real(complex(np.sum(Q.full(s.M) * s.N)))


def raw_moment(s: GaussianState, query, cap: int = MAX_QUERY) -> float:
    """``<Q_1 ... Q_q>`` for the ordered product."""
    q = _as_query(query, centered=False)
    return _moment(s, q.observables, centered=False, cap=cap)


def central_moment(s: GaussianState, query, cap: int = MAX_QUERY) -> float:
    """``<(Q_1 - <Q_1>) ... (Q_q - <Q_q>)>``."""
    q = _as_query(query)
    return _moment(s, q.observables, centered=True, cap=cap)


def central_moment_inclusion_exclusion(s: GaussianState, query) -> float:
    """Same quantity as :func:`central_moment` via subset expansion of raw moments."""
    obs = tuple(_as_query(query).observables)
    means = [expectation(s, o) for o in obs]
    total = 0.0
    q = len(obs)
    for k in range(q + 1):
        for subset in combinations(range(q), k):
            rest = [obs[i] for i in range(q) if i not in subset]
            total += (-1) ** k * np.prod([means[i] for i in subset]) * raw_moment(s, rest)
    return float(total)


def moment(s: GaussianState, query: MomentQuery) -> float:
    """Evaluate a query honoring its ``centered`` and ``regularized`` flags."""
    if query.regularized:
        return cofluctuation(s, query.observables)
    if query.centered:
        return central_moment(s, query)
    return raw_moment(s, query)


def variance(s: GaussianState, Q: QuadraticObservable) -> float:
    v = central_moment(s, [Q, Q])
    if v < -1e-12:
        raise ValueError(f"negative variance {v}")
    return max(v, 0.0)


def covariance(s: GaussianState, Q1: QuadraticObservable, Q2: QuadraticObservable) -> float:
    return central_moment(s, [Q1, Q2])


def pearson(s: GaussianState, Q1: QuadraticObservable, Q2: QuadraticObservable) -> float:
    v1, v2 = variance(s, Q1), variance(s, Q2)
    if v1 <= 0 or v2 <= 0:
        raise UndefinedCorrelationError("Pearson correlation undefined for zero variance")
    return covariance(s, Q1, Q2) / np.sqrt(v1 * v2)


def cofluctuation(s: GaussianState, query, variances: Sequence[float] | None = None) -> float:
    """Central moment of the variance-normalized observables.

    ``variances`` overrides the normalizers, e.g. to use values measured
    before a channel was applied.
    """
    obs = tuple(_as_query(query).observables)
    if variances is None:
        variances = [variance(s, o) for o in obs]
    if any(v <= 0 for v in variances):
        raise UndefinedCorrelationError("co-fluctuation undefined for zero variance")
    return central_moment(s, obs) / float(np.prod(np.sqrt(variances)))


def sigma0_query(spatial: Sequence[tuple[int, int]]) -> list[QuadraticObservable]:
    return [stokes(0, h, v) for h, v in spatial]


# ---------------------------------------------------------------- tensor


@dataclass(frozen=True)
class MomentTensor:
    """Joint central Stokes moments ``T[i1..in] = <S_i1 ... S_in>`` (centered).

    Not a density matrix: :meth:`as_matrix` renders the Pauli expansion
    ``2^-n sum T sigma_i1 x ... x sigma_in`` for display only.
    """

    entries: np.ndarray
    trace: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "trace", float(self.entries.flat[0]))

    @property
    def n(self) -> int:
        return self.entries.ndim

    def as_matrix(self) -> np.ndarray:
        n = self.n
        dim = 2**n
        out = np.zeros((dim, dim), dtype=complex)
        for idx in product(range(4), repeat=n):
            val = self.entries[idx]
            if val == 0:
                continue
            op = np.ones((1, 1), dtype=complex)
            for i in idx:
                op = np.kron(op, PAULI[i])
            out += val * op
        return out / dim

    def normalized(self) -> np.ndarray:
        """Rendered matrix divided by its trace."""
        m = self.as_matrix()
        tr = np.trace(m).real
        if tr == 0:
            raise UndefinedCorrelationError("zero-trace moment tensor cannot be normalized")
        return m / tr

    def nonzero(self, tol: float = 1e-10) -> set[tuple[int, ...]]:
        return {tuple(int(i) for i in idx) for idx in np.argwhere(np.abs(self.entries) > tol)}


def moment_tensor(s: GaussianState, spatial: Sequence[tuple[int, int]]) -> MomentTensor:
    n = len(spatial)
    if n > MAX_TENSOR_MODES:
        raise ValueError(f"moment tensor limited to {MAX_TENSOR_MODES} spatial modes, got {n}")
    if n == 0:
        raise ValueError("moment tensor needs at least one spatial mode")
    entries = np.zeros((4,) * n)
    stokes_ops = [[stokes(k, h, v) for k in range(4)] for h, v in spatial]
    for idx in product(range(4), repeat=n):
        entries[idx] = central_moment(s, [stokes_ops[m][k] for m, k in enumerate(idx)])
    return MomentTensor(entries)


# ---------------------------------------------------------------- stabilizers

NONZERO_THRESHOLD = 1e-8


@dataclass
class StabilizerReport:
    vertices: list
    betas: list[float]
    cross_terms: list[float]
    cofluctuations: list[float]
    threshold: float
    equal_predicted: bool
    equal_tol: float

    @property
    def nonzero(self) -> bool:
        return all(abs(b) > self.threshold for b in self.betas)

    @property
    def equal(self) -> bool:
        if not self.betas:
            return True
        b0 = self.betas[0]
        return all(abs(b - b0) <= self.equal_tol * max(1.0, abs(b0)) for b in self.betas)

    @property
    def passed(self) -> bool:
        return self.nonzero and (self.equal or not self.equal_predicted)

    def as_dict(self) -> dict:
        return {
            "vertices": [str(v) for v in self.vertices],
            "betas": list(self.betas),
            "cross_terms": list(self.cross_terms),
            "cofluctuations": list(self.cofluctuations),
            "threshold": self.threshold,
            "equal_predicted": self.equal_predicted,
            "passed": self.passed,
        }


def stabilizer_pattern(graph, vertex) -> dict:
    """Stokes index per vertex: 2 at ``vertex``, 1 on neighbors, 0 elsewhere."""
    nbrs = set(graph.neighbors(vertex))
    return {w: 2 if w == vertex else 1 if w in nbrs else 0 for w in graph.vertices}


def stabilizer_report(
    s: GaussianState,
    graph,
    modes: Mapping,
    threshold: float = NONZERO_THRESHOLD,
    equal_tol: float = 1e-9,
) -> StabilizerReport:
    """Evaluate the central-moment stabilizer of every vertex.

    ``modes`` maps each vertex label to its ``(h, v)`` mode indices. The
    cross-term for a vertex is the same query with its neighbors measured in
    ``S0`` (the vertex alone), which vanishes for a TMS-cluster.
    """
    missing = [v for v in graph.vertices if v not in modes]
    if missing:
        raise KeyError(f"graph vertices without mode mapping: {missing}")
    verts = list(graph.vertices)
    ops = {v: [stokes(k, *modes[v], name=v) for k in range(4)] for v in verts}
    variances = {v: [variance(s, ops[v][k]) for k in range(3)] for v in verts}
    betas, cross, cof = [], [], []
    for v in verts:
        pattern = stabilizer_pattern(graph, v)
        beta = central_moment(s, [ops[w][pattern[w]] for w in verts])
        betas.append(beta)
        cross.append(central_moment(s, [ops[w][2 if w == v else 0] for w in verts]))
        norm = float(np.prod([np.sqrt(variances[w][pattern[w]]) for w in verts]))
        cof.append(beta / norm if norm > 0 else 0.0)
    return StabilizerReport(
        verts, betas, cross, cof, threshold, bool(getattr(graph, "equal_betas", True)), equal_tol
    )
