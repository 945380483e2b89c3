"""Ordered Wick contraction kernel for products of quadratic observables.

A product ``Q_1 ... Q_q`` of number-conserving quadratics is a string of
``2q`` ladder operators. Wick's theorem writes its expectation as a sum over
perfect pairings; because each observable is a single edge between its two
legs, every pairing decomposes the observables into cycles. Summing over
pairings therefore factorizes into

    sum over set partitions of {1..q}  prod over blocks  kappa(block)

where ``kappa`` of a singleton is the mean (a self-pairing) and ``kappa`` of a
larger block is the sum over single-cycle pairings, i.e. the joint cumulant.
Central moments drop the singleton blocks.

Cycle sums are built with a dynamic program over subsets (``O(q^4 2^q)``
small matrix products), and the partition sum with a second subset DP
(``O(3^q)``). :func:`brute_force_moment` enumerates pairings and monomials
literally and serves as the independent check.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from itertools import product

import numpy as np

MAX_QUERY = 12

# leg types: dagger leg enters first in a_m^dag a_n
DAG, ANN = 0, 1


class QueryTooLargeError(ValueError):
    pass


def contraction_matrices(N: np.ndarray, A: np.ndarray, classical: bool = False) -> dict:
    """Two-point functions ``<x y>`` for leg types, earlier operator first.

    With ``classical=True`` the contractions are those of the Husimi
    variables (anti-normal ordering), which commute.
    """
    I = np.eye(N.shape[0])
    g = {
        (ANN, ANN): A,
        (ANN, DAG): N.T + I,
        (DAG, ANN): N + I if classical else N,
        (DAG, DAG): A.conj(),
    }
    return g


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("TMS_THREADS", "1")))
    except ValueError:
        return 1


class _Kernel:
    def __init__(self, N, A, observables, classical=False):
        q = len(observables)
        self.q = q
        D = max(len(o.modes) for o in observables)
        self.D = D
        g = contraction_matrices(np.asarray(N), np.asarray(A), classical)
        # padded local coefficient matrices
        K = np.zeros((q, D, D), dtype=complex)
        idx = []
        for j, o in enumerate(observables):
            d = len(o.modes)
            K[j, :d, :d] = o.K
            idx.append(np.array(o.modes))
        self.K = K
        self.means = np.array(
            [np.sum(o.K * g[(DAG, ANN)][np.ix_(ix, ix)]) for o, ix in zip(observables, idx)]
        )
        # C[j, t, k, u]: contraction block from leg t of j to leg u of k
        C = np.zeros((q, 2, q, 2, D, D), dtype=complex)
        for j in range(q):
            for k in range(q):
                if j == k:
                    continue
                for t in (DAG, ANN):
                    for u in (DAG, ANN):
                        dj, dk = len(idx[j]), len(idx[k])
                        if j < k:
                            blk = g[(t, u)][np.ix_(idx[j], idx[k])]
                        else:
                            blk = g[(u, t)][np.ix_(idx[k], idx[j])].T
                        C[j, t, k, u, :dj, :dk] = blk
        self.C = C
        # entering via DAG traverses K and exits via ANN; entering via ANN uses K^T
        self.through = {DAG: (K, ANN), ANN: (np.transpose(K, (0, 2, 1)), DAG)}

    def cumulants_from(self, s: int) -> dict[int, complex]:
        """Single-cycle sums for every block whose smallest element is ``s``."""
        q, D = self.q, self.D
        others = list(range(s + 1, q))
        r = len(others)
        size = 1 << r
        # P[mask over `others`, end position (0 = s, i+1 = others[i]), exit leg]
        P = np.zeros((size, r + 1, 2, D, D), dtype=complex)
        P[0, 0, ANN] = self.K[s]
        popcount = np.array([bin(m).count("1") for m in range(size)])
        layers = [np.flatnonzero(popcount == L) for L in range(r + 1)]
        labels = [s] + others
        for L in range(r):
            masks = layers[L]
            for e in range(r + 1):
                if e == 0:
                    sel = masks if L == 0 else masks[:0]
                else:
                    sel = masks[(masks >> (e - 1)) & 1 == 1]
                if sel.size == 0:
                    continue
                j = labels[e]
                for t in (DAG, ANN):
                    cur = P[sel, e, t]
                    if not np.any(cur):
                        continue
                    for i, k in enumerate(others):
                        free = sel[(sel >> i) & 1 == 0]
                        if free.size == 0:
                            continue
                        src = cur[(sel >> i) & 1 == 0]
                        for u in (DAG, ANN):
                            mats, out_leg = self.through[u]
                            step = self.C[j, t, k, u] @ mats[k]
                            P[free | (1 << i), i + 1, out_leg] += src @ step
        result = {}
        close = self.C[:, :, s, DAG]  # (q, 2, D, D) back to the start's dagger leg
        for mask in range(1, size):
            total = 0j
            for i in range(r):
                if (mask >> i) & 1:
                    k = others[i]
                    for t in (DAG, ANN):
                        total += np.trace(P[mask, i + 1, t] @ close[k, t])
            block = (1 << s) | sum(1 << others[i] for i in range(r) if (mask >> i) & 1)
            result[block] = total
        return result

    def cumulants(self) -> np.ndarray:
        q = self.q
        kappa = np.zeros(1 << q, dtype=complex)
        for j in range(q):
            kappa[1 << j] = self.means[j]
        starts = range(q - 1)
        workers = _threads()
        if workers > 1 and q > 6:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                parts = list(pool.map(self.cumulants_from, starts))
        else:
            parts = [self.cumulants_from(s) for s in starts]
        # fixed reduction order keeps results bit-identical across thread counts
        for part in parts:
            for block, val in part.items():
                kappa[block] = val
        return kappa


def partition_sum(kappa: np.ndarray, q: int, singletons: bool) -> complex:
    """Sum over set partitions of ``{0..q-1}`` of products of block weights."""
    full = (1 << q) - 1
    f = np.zeros(1 << q, dtype=complex)
    f[0] = 1.0
    for mask in range(1, full + 1):
        low = mask & -mask
        rest = mask ^ low
        total = 0j
        sub = rest
        while True:
            block = sub | low
            if block != low or singletons:
                w = kappa[block]
                if w != 0:
                    total += w * f[mask ^ block]
            if sub == 0:
                break
            sub = (sub - 1) & rest
        f[mask] = total
    return f[full]


def _check_size(q: int, cap: int) -> None:
    if q > cap:
        raise QueryTooLargeError(f"query has {q} observables; the enumeration cap is {cap}")


def ordered_moment(N, A, observables, centered: bool, classical: bool = False, cap: int = MAX_QUERY) -> complex:
    """Expectation of the ordered product (centered: product of ``Q_j - <Q_j>``)."""
    q = len(observables)
    if q == 0:
        return 1.0 + 0j
    _check_size(q, cap)
    kern = _Kernel(N, A, observables, classical)
    return partition_sum(kern.cumulants(), q, singletons=not centered)


def joint_cumulant(N, A, observables, classical: bool = False) -> complex:
    q = len(observables)
    _check_size(q, MAX_QUERY)
    if q == 1:
        return _Kernel(N, A, observables, classical).means[0]
    return _Kernel(N, A, observables, classical).cumulants()[(1 << q) - 1]


# ---------------------------------------------------------------- brute force


def pairings(items):
    """All perfect matchings of ``items`` as lists of ``(earlier, later)`` pairs."""
    items = list(items)
    if not items:
        yield []
        return
    first = items[0]
    for i in range(1, len(items)):
        pair = (first, items[i])
        for rest in pairings(items[1:i] + items[i + 1 :]):
            yield [pair] + rest


def brute_force_moment(N, A, observables, exclude_self: bool = False) -> complex:
    """Literal Wick sum over monomials and pairings; exponential, for checks only.

    With ``exclude_self`` pairings inside one observable are skipped, which
    gives the central moment.
    """
    N = np.asarray(N)
    A = np.asarray(A)
    I = np.eye(N.shape[0])

    def two_point(x, y):
        (tx, mx), (ty, my) = x, y
        if tx == DAG and ty == ANN:
            return N[mx, my]
        if tx == ANN and ty == DAG:
            return N[my, mx] + I[mx, my]
        if tx == ANN:
            return A[mx, my]
        return np.conj(A[mx, my])

    q = len(observables)
    if q == 0:
        return 1.0 + 0j
    all_pairings = list(pairings(range(2 * q)))
    if exclude_self:
        all_pairings = [p for p in all_pairings if not any(a // 2 == b // 2 for a, b in p)]
    term_lists = [list(o.terms()) for o in observables]
    total = 0j
    for combo in product(*term_lists):
        coef = 1 + 0j
        ops = []
        for c, m, n in combo:
            coef *= c
            ops.extend([(DAG, m), (ANN, n)])
        acc = 0j
        for p in all_pairings:
            val = 1 + 0j
            for a, b in p:
                val *= two_point(ops[a], ops[b])
                if val == 0:
                    break
            acc += val
        total += coef * acc
    return total
