"""Truncated Fock-space reference simulator.

States are kept sparse: an integer occupation table (one row per basis
vector, one column per mode) and a complex amplitude per row. Squeezers are
written down from the Schmidt form, so they may only act on vacuum pairs.
The cutoff bounds the photons each squeezer or amplifier creates per mode;
passive gates conserve photon number and are applied exactly, so a mode can
end up holding more than ``cutoff`` photons after mixing.
Loss and gain are purified with fresh ancilla modes appended after the
system modes; observables never touch ancillas, so no partial trace is
needed.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb, exp, lgamma, sqrt

import numpy as np

from .circuit import Circuit
from .observables import MomentQuery, QuadraticObservable

PRUNE = 1e-13
MAX_TERMS = 4_000_000


class UnsupportedCircuitError(ValueError):
    pass


class CapacityError(MemoryError):
    pass


@dataclass(frozen=True)
class FockVector:
    occ: np.ndarray  # (terms, modes) int
    amp: np.ndarray  # (terms,) complex
    n_system: int
    cutoff: int
    eps_trunc: float = 0.0

    @property
    def n_modes(self) -> int:
        return self.occ.shape[1]

    @property
    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amp) ** 2)))

    def dense(self) -> np.ndarray:
        """Full amplitude tensor of shape ``(n_max + 1,) * n_modes``."""
        n_max = int(self.occ.max(initial=0))
        out = np.zeros((n_max + 1,) * self.n_modes, dtype=complex)
        out[tuple(self.occ.T)] = self.amp
        return out

    def amplitude(self, occupation) -> complex:
        hit = np.all(self.occ == np.asarray(occupation), axis=1)
        return complex(self.amp[hit].sum())


def _keys(occ: np.ndarray, base: int | None = None) -> np.ndarray | None:
    """Pack occupation rows into int64 keys; ``None`` if they would overflow."""
    if base is None:
        base = int(occ.max(initial=0)) + 1
    if base ** occ.shape[1] >= 2**62:
        return None
    powers = base ** np.arange(occ.shape[1], dtype=np.int64)
    return occ @ powers


def _group(occ: np.ndarray, base: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """First-occurrence row index of every distinct row and the inverse map."""
    keys = _keys(occ, base)
    if keys is None:
        _, first, inv = np.unique(occ, axis=0, return_index=True, return_inverse=True)
    else:
        _, first, inv = np.unique(keys, return_index=True, return_inverse=True)
    return first, inv.reshape(-1)


def _merge(occ: np.ndarray, amp: np.ndarray, prune: float = PRUNE) -> tuple[np.ndarray, np.ndarray]:
    if occ.shape[0] == 0:
        return occ, amp
    first, inv = _group(occ)
    out = np.zeros(first.size, dtype=complex)
    np.add.at(out, inv, amp)
    keep = np.abs(out) > prune
    return occ[first][keep], out[keep]


def _vacuum(n_modes: int, cutoff: int, n_system: int) -> FockVector:
    return FockVector(np.zeros((1, n_modes), dtype=np.int64), np.ones(1, dtype=complex), n_system, cutoff)


@lru_cache(maxsize=64)
def _passive_table(u: tuple, n_max: int) -> np.ndarray:
    """``T[n1, n2, p]``: amplitude of ``|p, n1+n2-p>`` from ``|n1, n2>``.

    Uses ``V a_k^dag V^dag = sum_i U[i, k] a_i^dag`` for the Heisenberg map
    ``a -> U a``.
    """
    U = np.array(u, dtype=complex).reshape(2, 2)
    c = n_max
    T = np.zeros((c + 1, c + 1, 2 * c + 1), dtype=complex)
    for n1 in range(c + 1):
        p1 = np.array([comb(n1, k) * U[0, 0] ** k * U[1, 0] ** (n1 - k) for k in range(n1 + 1)])
        for n2 in range(c + 1):
            p2 = np.array([comb(n2, k) * U[0, 1] ** k * U[1, 1] ** (n2 - k) for k in range(n2 + 1)])
            poly = np.convolve(p1, p2)  # coefficient of x^p y^(N-p)
            N = n1 + n2
            lg = lgamma(n1 + 1) + lgamma(n2 + 1)
            norm = np.array([exp(0.5 * (lgamma(p + 1) + lgamma(N - p + 1) - lg)) for p in range(N + 1)])
            T[n1, n2, : N + 1] = poly * norm
    return T


def _apply_passive(f: FockVector, i: int, j: int, U: np.ndarray, max_terms: int) -> FockVector:
    n1, n2 = f.occ[:, i], f.occ[:, j]
    # round the table size up so the cache is reused across gates
    c = 8 * (int(max(n1.max(initial=0), n2.max(initial=0))) // 8 + 1)
    T = _passive_table(tuple(np.asarray(U, dtype=complex).ravel()), c)
    N = n1 + n2
    p = np.arange(2 * c + 1)
    coef = T[n1, n2]  # (terms, 2c+1)
    valid = (p[None, :] <= N[:, None]) & (coef != 0)
    rows, cols = np.nonzero(valid)
    _check_capacity(rows.size, max_terms)
    occ = f.occ[rows].copy()
    occ[:, i] = cols
    occ[:, j] = N[rows] - cols
    occ, amp = _merge(occ, f.amp[rows] * coef[rows, cols])
    return FockVector(occ, amp, f.n_system, f.cutoff, f.eps_trunc)


def _check_capacity(n: int, max_terms: int) -> None:
    if n > max_terms:
        raise CapacityError(f"Fock expansion needs {n} terms, above the limit of {max_terms}")


def _apply_squeezer(f: FockVector, i: int, j: int, r: float, phi: float, max_terms: int) -> FockVector:
    if np.any(f.occ[:, i] != 0) or np.any(f.occ[:, j] != 0):
        raise UnsupportedCircuitError("the Fock oracle squeezes only modes that are still in vacuum")
    c = f.cutoff
    n = np.arange(c + 1)
    weights = (np.tanh(r) * np.exp(1j * phi)) ** n / np.cosh(r)
    _check_capacity(f.occ.shape[0] * (c + 1), max_terms)
    occ = np.repeat(f.occ, c + 1, axis=0)
    occ[:, i] = np.tile(n, f.occ.shape[0])
    occ[:, j] = occ[:, i]
    amp = np.repeat(f.amp, c + 1) * np.tile(weights, f.occ.shape[0])
    occ, amp = _merge(occ, amp)
    return FockVector(occ, amp, f.n_system, c, f.eps_trunc)


def _add_ancilla(f: FockVector) -> tuple[FockVector, int]:
    occ = np.hstack([f.occ, np.zeros((f.occ.shape[0], 1), dtype=np.int64)])
    return FockVector(occ, f.amp, f.n_system, f.cutoff, f.eps_trunc), occ.shape[1] - 1


def _apply_loss(f: FockVector, i: int, t: float, max_terms: int) -> FockVector:
    f, anc = _add_ancilla(f)
    ct, st = np.sqrt(t), np.sqrt(1 - t)
    U = np.array([[ct, 1j * st], [1j * st, ct]])
    return _apply_passive(f, i, anc, U, max_terms)


def _apply_gain(f: FockVector, i: int, g: float, max_terms: int) -> FockVector:
    """Two-mode squeezer with a vacuum ancilla, from ``S|k,0> = sum_n c_kn |k+n, n>``."""
    f, anc = _add_ancilla(f)
    c = f.cutoff
    k = f.occ[:, i]
    k_max = int(k.max(initial=0))
    n = np.arange(c + 1)
    tab = np.array(
        [[sqrt(comb(kk + nn, kk)) for nn in range(c + 1)] for kk in range(k_max + 1)]
    ) * (np.tanh(g) ** n)[None, :] / np.cosh(g) ** (np.arange(k_max + 1)[:, None] + 1)
    coef = tab[k]
    rows, cols = np.nonzero(coef != 0)
    _check_capacity(rows.size, max_terms)
    occ = f.occ[rows].copy()
    occ[:, i] = k[rows] + cols
    occ[:, anc] = cols
    occ, amp = _merge(occ, f.amp[rows] * coef[rows, cols])
    return FockVector(occ, amp, f.n_system, c, f.eps_trunc)


def oracle_state(circuit: Circuit, cutoff: int, max_terms: int = MAX_TERMS) -> FockVector:
    """Simulate ``circuit`` in a truncated Fock basis.

    Each squeezer and amplifier keeps Schmidt terms with at most ``cutoff``
    photons per mode; ``eps_trunc`` is the norm lost to that truncation.
    """
    if cutoff < 4:
        raise ValueError("cutoff must be at least 4")
    M = len(circuit.modes)
    f = _vacuum(M, cutoff, M)
    idx = circuit.index
    for g in circuit.gates:
        if g.kind == "squeeze":
            f = _apply_squeezer(f, idx(g.modes[0]), idx(g.modes[1]), g.params[0], g.params[1], max_terms)
        elif g.kind == "hadamard":
            f = _apply_passive(f, idx(g.modes[0]), idx(g.modes[1]), np.array([[1, 1], [1, -1]]) / np.sqrt(2), max_terms)
        elif g.kind == "bs":
            th, ph = g.params
            U = np.array([[np.cos(th), -np.exp(-1j * ph) * np.sin(th)], [np.exp(1j * ph) * np.sin(th), np.cos(th)]])
            f = _apply_passive(f, idx(g.modes[0]), idx(g.modes[1]), U, max_terms)
        elif g.kind in ("swap", "pbs"):
            if g.kind == "pbs":
                i, j = circuit.pair(g.modes[0])[1], circuit.pair(g.modes[1])[1]
                phase = 1j if circuit.reflection_phase else 1.0
            else:
                i, j = idx(g.modes[0]), idx(g.modes[1])
                phase = 1.0
            f = _apply_passive(f, i, j, np.array([[0, phase], [phase, 0]]), max_terms)
        elif g.kind == "loss":
            f = _apply_loss(f, idx(g.modes[0]), g.params[0], max_terms)
        elif g.kind == "gain":
            f = _apply_gain(f, idx(g.modes[0]), g.params[0], max_terms)
    norm2 = float(np.sum(np.abs(f.amp) ** 2))
    return FockVector(f.occ, f.amp / np.sqrt(norm2), f.n_system, cutoff, max(0.0, 1.0 - norm2))


# ---------------------------------------------------------------- expectations


def _apply_observable(occ, amp, Q: QuadraticObservable):
    out_occ, out_amp = [], []
    for coef, m, n in Q.terms():
        has = occ[:, n] > 0
        o = occ[has].copy()
        a = amp[has] * np.sqrt(o[:, n])
        o[:, n] -= 1
        a = a * np.sqrt(o[:, m] + 1)
        o[:, m] += 1
        out_occ.append(o)
        out_amp.append(coef * a)
    if not out_occ:
        return occ[:0], amp[:0]
    return _merge(np.vstack(out_occ), np.concatenate(out_amp), prune=0.0)


def _inner(occ1, amp1, occ2, amp2) -> complex:
    """``<1|2>`` for sparse vectors."""
    if occ1.shape[0] == 0 or occ2.shape[0] == 0:
        return 0j
    n1 = occ1.shape[0]
    both = np.vstack([occ1, occ2])
    first, inv = _group(both)
    left = np.zeros(first.size, dtype=complex)
    left[inv[:n1]] = amp1
    return complex(np.sum(np.conj(left[inv[n1:]]) * amp2))


def _check_system(f: FockVector, observables) -> None:
    for o in observables:
        if max(o.modes) >= f.n_system:
            raise ValueError(f"observable {o.label} touches an ancilla or unknown mode")


def _obs_key(Q: QuadraticObservable) -> tuple:
    return (Q.modes, Q.K.tobytes())


def _shifted(f: FockVector, occ, amp, Q: QuadraticObservable, mu: float):
    """``(Q - mu)`` applied to a sparse vector."""
    qo, qa = _apply_observable(occ, amp, Q)
    if mu == 0.0:
        return qo, qa
    return _merge(np.vstack([qo, occ]), np.concatenate([qa, -mu * amp]), prune=0.0)


def oracle_expectation(f: FockVector, Q: QuadraticObservable, cache: dict | None = None) -> float:
    _check_system(f, [Q])
    key = ("mean", _obs_key(Q))
    if cache is not None and key in cache:
        return cache[key]
    occ, amp = _apply_observable(f.occ, f.amp, Q)
    value = _inner(f.occ, f.amp, occ, amp).real
    if cache is not None:
        cache[key] = value
    return value


def oracle_moment(f: FockVector, query, cache: dict | None = None) -> float:
    """Exact expectation of the (centered) ordered product on the truncated state.

    The product is split between bra and ket, which is valid because every
    (shifted) factor is Hermitian. ``cache`` may be shared across calls on the
    same ``f`` to reuse means and partially applied vectors.
    """
    if not isinstance(query, MomentQuery):
        query = MomentQuery(tuple(query))
    if query.regularized:
        raise ValueError("the oracle evaluates plain or centered queries only")
    obs = query.observables
    _check_system(f, obs)
    if cache is None:
        cache = {}
    means = [oracle_expectation(f, o, cache) for o in obs] if query.centered else [0.0] * len(obs)
    factors = [(o, mu) for o, mu in zip(obs, means)]
    k = len(factors) // 2
    # <psi| F_1 ... F_k  F_k+1 ... F_q |psi>: bra gets F_1 first, ket gets F_q first
    bra = _chain(f, factors[:k], cache)
    ket = _chain(f, factors[k:][::-1], cache)
    return _inner(*bra, *ket).real


def _chain(f: FockVector, factors, cache: dict):
    occ, amp = f.occ, f.amp
    key: tuple = ()
    for Q, mu in factors:
        key = key + ((_obs_key(Q), mu),)
        if ("vec", key) in cache:
            occ, amp = cache[("vec", key)]
            continue
        occ, amp = _shifted(f, occ, amp, Q, mu)
        cache[("vec", key)] = (occ, amp)
    return occ, amp


def photon_distribution(f: FockVector) -> tuple[np.ndarray, np.ndarray]:
    """Joint photon-number distribution of the system modes (ancillas traced out)."""
    sys = f.occ[:, : f.n_system]
    uniq, inv = np.unique(sys, axis=0, return_inverse=True)
    p = np.zeros(uniq.shape[0])
    np.add.at(p, inv.reshape(-1), np.abs(f.amp) ** 2)
    return uniq, p / p.sum()


def oracle_sample(f: FockVector, shots: int, seed: int) -> list[tuple[int, ...]]:
    """Born-rule photon-number samples; Philox stream keyed by ``seed``."""
    if shots < 0:
        raise ValueError("shots must be non-negative")
    if shots == 0:
        return []
    outcomes, p = photon_distribution(f)
    rng = np.random.Generator(np.random.Philox(seed))
    picks = rng.choice(len(p), size=shots, p=p)
    return [tuple(int(x) for x in outcomes[k]) for k in picks]
