"""Zero-mean Gaussian states stored as normally ordered second moments.

A state on ``M`` bosonic modes is described by two ``M x M`` matrices

    N[i, j] = <a_i^dagger a_j>      (Hermitian, positive semidefinite)
    A[i, j] = <a_i a_j>             (complex symmetric)

Every operation is a Heisenberg-picture map ``a -> X a + Y a^dagger (+ noise)``
and returns a new state; states are never mutated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_TOL = 1e-10


class PhysicalityError(ValueError):
    """Raised when second moments violate a Gaussian-state invariant."""


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=complex, copy=True)
    arr.setflags(write=False)
    return arr


def quadrature_covariance(N: np.ndarray, A: np.ndarray) -> np.ndarray:
    """Real covariance of ``(x_1..x_M, p_1..p_M)``; vacuum gives ``I/2``."""
    M = N.shape[0]
    eye = np.eye(M)
    # symmetrized covariance of (a, a^dagger)
    G = np.block([[N.T + eye / 2, A], [A.conj(), N + eye / 2]])
    T = np.block([[eye, eye], [-1j * eye, 1j * eye]]) / np.sqrt(2)
    return (T @ G @ T.conj().T).real


def symplectic_form(M: int) -> np.ndarray:
    eye = np.eye(M)
    zero = np.zeros((M, M))
    return np.block([[zero, eye], [-eye, zero]])


def physicality_margin(N: np.ndarray, A: np.ndarray) -> float:
    """Smallest eigenvalue of ``sigma + i Omega / 2`` (non-negative when physical)."""
    sigma = quadrature_covariance(N, A)
    M = N.shape[0]
    return float(np.linalg.eigvalsh(sigma + 0.5j * symplectic_form(M)).min())


@dataclass(frozen=True)
class GaussianState:
    """Zero-mean Gaussian state of ``M`` modes.

    Construction validates Hermiticity of ``N``, symmetry of ``A``, positivity
    of ``N`` and the uncertainty relation ``sigma + i Omega / 2 >= 0``.
    """

    N: np.ndarray
    A: np.ndarray
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        N = _frozen(self.N)
        A = _frozen(self.A)
        if N.ndim != 2 or N.shape[0] != N.shape[1] or A.shape != N.shape:
            raise ValueError(f"N and A must be matching square matrices, got {N.shape} and {A.shape}")
        object.__setattr__(self, "N", N)
        object.__setattr__(self, "A", A)
        self.check()

    @property
    def M(self) -> int:
        return self.N.shape[0]

    def check(self, tol: float | None = None) -> None:
        tol = self.tol if tol is None else tol
        N, A = self.N, self.A
        if not (np.all(np.isfinite(N)) and np.all(np.isfinite(A))):
            raise PhysicalityError("second moments must be finite")
        if np.abs(N - N.conj().T).max(initial=0.0) > tol:
            raise PhysicalityError("N must be Hermitian")
        if np.abs(A - A.T).max(initial=0.0) > tol:
            raise PhysicalityError("A must be symmetric")
        if np.linalg.eigvalsh((N + N.conj().T) / 2).min() < -tol:
            raise PhysicalityError("N must be positive semidefinite")
        if physicality_margin(N, A) < -tol:
            raise PhysicalityError("uncertainty relation sigma + i*Omega/2 >= 0 violated")

    def is_physical(self, tol: float | None = None) -> bool:
        try:
            self.check(tol)
        except PhysicalityError:
            return False
        return True

    def covariance(self) -> np.ndarray:
        return quadrature_covariance(self.N, self.A)

    def total_photons(self) -> float:
        return float(np.trace(self.N).real)

    def fingerprint(self) -> str:
        import hashlib

        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.N).tobytes())
        h.update(np.ascontiguousarray(self.A).tobytes())
        return h.hexdigest()[:16]


def new_vacuum(M: int) -> GaussianState:
    if M < 1:
        raise ValueError("a state needs at least one mode")
    zero = np.zeros((M, M), dtype=complex)
    return GaussianState(zero, zero)


def _check_mode(s: GaussianState, i: int) -> None:
    if not 0 <= i < s.M:
        raise IndexError(f"mode {i} out of range for {s.M}-mode state")


def _check_pair(s: GaussianState, i: int, j: int) -> None:
    _check_mode(s, i)
    _check_mode(s, j)
    if i == j:
        raise ValueError("gate modes must differ")


def bogoliubov(s: GaussianState, X: np.ndarray, Y: np.ndarray, noise: np.ndarray | None = None) -> GaussianState:
    """Apply ``a -> X a + Y a^dagger`` and add ``noise`` to ``N``.

    ``noise`` is the normally ordered contribution of uncorrelated ancilla
    modes (zero for vacuum ancillas mixed in passively).
    """
    N, A = s.N, s.A
    I = np.eye(s.M)
    Xc, Yc = X.conj(), Y.conj()
    anti = N.T + I  # <a_m a_n^dagger>
    newN = Xc @ N @ X.T + Xc @ A.conj() @ Y.T + Yc @ A @ X.T + Yc @ anti @ Y.T
    newA = X @ A @ X.T + X @ anti @ Y.T + Y @ N @ X.T + Y @ A.conj() @ Y.T
    if noise is not None:
        newN = newN + noise
    # remove rounding asymmetry so invariants hold at machine precision
    newN = (newN + newN.conj().T) / 2
    newA = (newA + newA.T) / 2
    return GaussianState(newN, newA, s.tol)


def _passive(s: GaussianState, i: int, j: int, u: np.ndarray) -> GaussianState:
    X = np.eye(s.M, dtype=complex)
    idx = np.array([i, j])
    X[np.ix_(idx, idx)] = u
    return bogoliubov(s, X, np.zeros_like(X))


def apply_squeezer(s: GaussianState, i: int, j: int, r: float, phi: float = 0.0) -> GaussianState:
    """Two-mode squeezer ``exp(r e^{i phi} a_i^dag a_j^dag - h.c.)``."""
    _check_pair(s, i, j)
    if r < 0:
        raise ValueError("squeezing r must be non-negative")
    ch, sh = np.cosh(r), np.sinh(r)
    X = np.eye(s.M, dtype=complex)
    Y = np.zeros((s.M, s.M), dtype=complex)
    X[i, i] = X[j, j] = ch
    Y[i, j] = Y[j, i] = np.exp(1j * phi) * sh
    return bogoliubov(s, X, Y)


def apply_beamsplitter(s: GaussianState, i: int, j: int, mixing: float, phase: float = 0.0) -> GaussianState:
    """Passive mixer ``a_i -> cos a_i - e^{-i phase} sin a_j``, ``a_j -> e^{i phase} sin a_i + cos a_j``."""
    _check_pair(s, i, j)
    c, sn = np.cos(mixing), np.sin(mixing)
    u = np.array([[c, -np.exp(-1j * phase) * sn], [np.exp(1j * phase) * sn, c]])
    return _passive(s, i, j, u)


HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2)


def apply_hadamard(s: GaussianState, i: int, j: int) -> GaussianState:
    """50/50 mixer ``a -> (a + b)/sqrt2``, ``b -> (a - b)/sqrt2`` (an involution)."""
    _check_pair(s, i, j)
    return _passive(s, i, j, HADAMARD)


def apply_phase(s: GaussianState, i: int, theta: float) -> GaussianState:
    _check_mode(s, i)
    X = np.eye(s.M, dtype=complex)
    X[i, i] = np.exp(1j * theta)
    return bogoliubov(s, X, np.zeros_like(X))


def apply_swap(s: GaussianState, i: int, j: int, phase: complex = 1.0) -> GaussianState:
    _check_pair(s, i, j)
    return _passive(s, i, j, np.array([[0, phase], [phase, 0]], dtype=complex))


def apply_pbs(
    s: GaussianState,
    spatial_a: tuple[int, int],
    spatial_b: tuple[int, int],
    reflection_phase: bool = False,
) -> GaussianState:
    """Polarizing beamsplitter: h-submodes pass, v-submodes swap.

    The reflection phase is ignored by default; ``reflection_phase=True``
    multiplies reflected modes by ``i`` instead.
    """
    modes = list(spatial_a) + list(spatial_b)
    for m in modes:
        _check_mode(s, m)
    if len(set(modes)) != 4:
        raise ValueError("pbs needs four distinct mode indices")
    return apply_swap(s, spatial_a[1], spatial_b[1], 1j if reflection_phase else 1.0)


def apply_loss(s: GaussianState, i: int, t: float) -> GaussianState:
    """Mix mode ``i`` with a vacuum ancilla at intensity transmissivity ``t``."""
    _check_mode(s, i)
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"transmissivity must lie in [0, 1], got {t}")
    X = np.eye(s.M, dtype=complex)
    X[i, i] = np.sqrt(t)
    return bogoliubov(s, X, np.zeros_like(X))


def apply_gain(s: GaussianState, i: int, g: float) -> GaussianState:
    """Phase-insensitive amplifier ``a -> cosh(g) a + sinh(g) c^dagger``, ``c`` in vacuum."""
    _check_mode(s, i)
    if g < 0:
        raise ValueError(f"gain must be non-negative, got {g}")
    X = np.eye(s.M, dtype=complex)
    X[i, i] = np.cosh(g)
    noise = np.zeros((s.M, s.M), dtype=complex)
    noise[i, i] = np.sinh(g) ** 2
    return bogoliubov(s, X, np.zeros_like(X), noise)


def mean_photon(s: GaussianState, i: int) -> float:
    _check_mode(s, i)
    return float(s.N[i, i].real)
