"""Quadratic number-conserving observables ``Q = sum K[m, n] a_m^dagger a_n``."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

STOKES_MATRICES = {
    0: np.array([[1, 0], [0, 1]], dtype=complex),
    1: np.array([[1, 0], [0, -1]], dtype=complex),
    2: np.array([[0, 1], [1, 0]], dtype=complex),
    # i (a_v^dag a_h - a_h^dag a_v): K[v, h] = i, K[h, v] = -i
    3: np.array([[0, -1j], [1j, 0]], dtype=complex),
}

OBSERVABLE_NAMES = ("N", "S0", "S1", "S2", "S3")


@dataclass(frozen=True)
class QuadraticObservable:
    """Hermitian quadratic form supported on a few modes.

    ``modes`` lists the global mode indices the form touches and ``K`` is the
    local coefficient matrix over them (rows pair with ``a^dagger``, columns
    with ``a``). ``spatial`` identifies the spatial mode for query checks.
    """

    modes: tuple[int, ...]
    K: np.ndarray
    label: str = "custom"
    spatial: object = None
    tol: float = field(default=1e-12, repr=False)

    def __post_init__(self):
        K = np.array(self.K, dtype=complex)
        K.setflags(write=False)
        modes = tuple(int(m) for m in self.modes)
        if K.shape != (len(modes), len(modes)):
            raise ValueError("coefficient matrix does not match support")
        if len(set(modes)) != len(modes):
            raise ValueError("observable support has repeated modes")
        if np.abs(K - K.conj().T).max(initial=0.0) > self.tol:
            raise ValueError("observable coefficients must be Hermitian")
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "modes", modes)
        if self.spatial is None:
            object.__setattr__(self, "spatial", modes)

    def full(self, M: int) -> np.ndarray:
        """Coefficient matrix embedded in an ``M``-mode system."""
        if max(self.modes) >= M:
            raise ValueError(f"observable touches mode {max(self.modes)} but state has {M} modes")
        out = np.zeros((M, M), dtype=complex)
        idx = np.array(self.modes)
        out[np.ix_(idx, idx)] = self.K
        return out

    def terms(self):
        """Non-zero ``(coef, m, n)`` monomials of ``a_m^dagger a_n``."""
        for a, m in enumerate(self.modes):
            for b, n in enumerate(self.modes):
                if self.K[a, b] != 0:
                    yield complex(self.K[a, b]), m, n


def number(i: int, label: str | None = None) -> QuadraticObservable:
    return QuadraticObservable((i,), np.ones((1, 1)), label or f"n({i})", spatial=(i,))


def stokes(k: int, h: int, v: int, name: str | None = None) -> QuadraticObservable:
    """Stokes component ``k`` in {0,1,2,3} on the polarized mode pair ``(h, v)``."""
    if k not in STOKES_MATRICES:
        raise ValueError(f"Stokes index must be 0..3, got {k}")
    spatial = name if name is not None else (h, v)
    return QuadraticObservable((h, v), STOKES_MATRICES[k], f"S{k}({spatial})", spatial=spatial)


def custom(K: np.ndarray, label: str = "custom") -> QuadraticObservable:
    """Observable from a full ``M x M`` coefficient matrix."""
    K = np.asarray(K, dtype=complex)
    support = np.flatnonzero(np.any(K != 0, axis=0) | np.any(K != 0, axis=1))
    if support.size == 0:
        support = np.array([0])
    return QuadraticObservable(tuple(support), K[np.ix_(support, support)], label)


@dataclass(frozen=True)
class MomentQuery:
    """Ordered product of observables, optionally centered and/or variance-regularized."""

    observables: tuple[QuadraticObservable, ...]
    centered: bool = True
    regularized: bool = False

    def __post_init__(self):
        obs = tuple(self.observables)
        object.__setattr__(self, "observables", obs)
        if self.regularized and not self.centered:
            raise ValueError("regularized queries are always centered")

    def __len__(self):
        return len(self.observables)

    def check_disjoint(self) -> None:
        """At most one observable per spatial mode, disjoint supports."""
        seen: set[int] = set()
        spatials = []
        for q in self.observables:
            if seen.intersection(q.modes) or q.spatial in spatials:
                raise ValueError(f"observable {q.label} shares a spatial mode with another in the query")
            seen.update(q.modes)
            spatials.append(q.spatial)
