import math

import numpy as np
import pytest

from tmscluster import planner, state as gs
from tmscluster.circuit import Circuit, simulate
from tmscluster.fock import oracle_sample, oracle_state
from tmscluster.moments import central_moment, raw_moment
from tmscluster.observables import MomentQuery, number, stokes
from tmscluster.sampler import (
    UnsupportedDegreeError,
    antinormal_polynomial,
    estimate_query,
    estimator_variance,
    husimi_covariance,
    sample_state,
    shots_to_resolve,
)
from tmscluster.wick import ordered_moment

from conftest import random_observables, random_state, tmsv


def bell(r):
    c = planner.bell_circuit(r)
    return c, simulate(c)


def test_vacuum_husimi_offset():
    batch = sample_state(gs.new_vacuum(1), 1_000_000, seed=0)
    x = np.abs(batch.alpha[:, 0]) ** 2
    se = x.std() / np.sqrt(x.size)
    assert abs(x.mean() - 1.0) < 3 * se


def test_tmsv_mean_photon():
    _, s = tmsv(1.0)
    batch = sample_state(s, 200_000, seed=4)
    x = np.abs(batch.alpha[:, 0]) ** 2 - 1
    se = x.std() / np.sqrt(x.size)
    assert abs(x.mean() - 1.381098) < 5 * se


def test_determinism():
    _, s = bell(0.5)
    a = sample_state(s, 1000, seed=7)
    b = sample_state(s, 1000, seed=7)
    assert np.array_equal(a.alpha, b.alpha) and a.fingerprint == s.fingerprint()
    q = [stokes(0, 0, 1), stokes(0, 2, 3)]
    assert estimate_query(a, q) == estimate_query(b, q)
    assert not np.array_equal(sample_state(s, 1000, seed=8).alpha, a.alpha)


def test_unphysical_rejected():
    s = gs.new_vacuum(2)
    object.__setattr__(s, "A", np.array([[0, 1.0], [1.0, 0]]))  # bypass construction checks
    with pytest.raises(gs.PhysicalityError):
        sample_state(s, 10, 0)


def test_husimi_covariance_psd(rng):
    for _ in range(10):
        s = random_state(rng, 5)
        assert np.linalg.eigvalsh(husimi_covariance(s)).min() > -1e-12


def test_antinormal_table_matches_engine(rng):
    # the classical (Husimi) average of the anti-normal polynomial must equal
    # the quantum ordered moment
    for _ in range(15):
        M = int(rng.integers(2, 6))
        s = random_state(rng, M)
        obs = random_observables(rng, M, int(rng.integers(1, 5)))
        poly = antinormal_polynomial(obs)
        total = 0j
        for mono, coef in poly.items():
            total += coef * _isserlis(s, mono)
        assert total.real == pytest.approx(ordered_moment(s.N, s.A, obs, centered=False).real, rel=1e-9, abs=1e-12)


def _isserlis(s, mono):
    """Husimi average of an alpha/conj(alpha) monomial by literal Isserlis pairing."""
    from tmscluster.wick import ANN, DAG, pairings

    if not mono:
        return 1.0

    P = s.N.T + np.eye(s.M)  # E[alpha_m conj(alpha_n)]
    A = s.A

    def two(x, y):
        (lx, mx), (ly, my) = x, y
        if lx == ANN and ly == ANN:
            return A[mx, my]
        if lx == DAG and ly == DAG:
            return np.conj(A[mx, my])
        if lx == ANN:
            return P[mx, my]
        return P[my, mx]

    if len(mono) % 2:
        return 0.0
    total = 0j
    for p in pairings(list(range(len(mono)))):
        term = 1 + 0j
        for i, j in p:
            term *= two(mono[i], mono[j])
        total += term
    return total


def test_bell_estimates():
    c, s = bell(1.0)
    a, b = c.pair("a"), c.pair("b")
    batch = sample_state(s, 100_000, seed=21)
    rep = estimate_query(batch, [stokes(0, *a), stokes(0, *b)])
    assert rep.stderr > 0 and rep.shots == 100_000
    assert abs(rep.estimate - 6.57706) < 5 * rep.stderr
    cross = estimate_query(batch, [stokes(1, *a), stokes(2, *b)])
    assert abs(cross.z) < 5


def test_vacuum_estimates_zero():
    batch = sample_state(gs.new_vacuum(4), 50_000, seed=1)
    for k in range(4):
        rep = estimate_query(batch, [stokes(k, 0, 1), stokes(k, 2, 3)])
        assert abs(rep.z) < 5


def test_raw_query():
    c, s = bell(0.5)
    batch = sample_state(s, 100_000, seed=2)
    q = MomentQuery((stokes(0, *c.pair("a")), stokes(0, *c.pair("b"))), centered=False)
    rep = estimate_query(batch, q)
    assert abs(rep.estimate - raw_moment(s, q)) < 5 * rep.stderr


def test_degree_and_range_errors():
    batch = sample_state(gs.new_vacuum(10), 100, seed=0)
    with pytest.raises(UnsupportedDegreeError):
        estimate_query(batch, [stokes(0, 2 * i, 2 * i + 1) for i in range(5)])
    with pytest.raises(ValueError):
        estimate_query(batch, [number(11)])
    with pytest.raises(ValueError):
        estimate_query(sample_state(gs.new_vacuum(1), 1, 0), [number(0)])


def test_estimator_variance_matches_jackknife():
    c, s = bell(1.0)
    q = [stokes(0, *c.pair("a")), stokes(0, *c.pair("b"))]
    predicted = math.sqrt(estimator_variance(s, q) / 100_000)
    errs = [estimate_query(sample_state(s, 100_000, seed=k), q).stderr for k in range(5)]
    assert np.mean(errs) == pytest.approx(predicted, rel=0.1)


def test_three_way_agreement_small_r():
    # photon-number mean: exact engine, Husimi estimator, Fock Born sampling
    c = Circuit(("a", "b"), polarized=False).append("squeeze", ("a", "b"), (0.3, 0)).append("loss", ("a",), (0.8,))
    s = simulate(c)
    exact_cov = central_moment(s, [number(0), number(1)])
    rep = estimate_query(sample_state(s, 200_000, seed=5), [number(0), number(1)])
    x = np.array(oracle_sample(oracle_state(c, 12), 200_000, seed=5), dtype=float)
    fock_cov = np.cov(x[:, 0], x[:, 1])[0, 1]
    fock_se = np.std((x[:, 0] - x[:, 0].mean()) * (x[:, 1] - x[:, 1].mean())) / np.sqrt(len(x))
    assert abs(rep.estimate - exact_cov) < 5 * rep.stderr
    assert abs(fock_cov - exact_cov) < 5 * fock_se
    assert abs(rep.estimate - fock_cov) < 5 * math.hypot(rep.stderr, fock_se)


def test_shots_to_resolve_ghz_vs_bell():
    r = 0.5
    bc, bs = bell(r)
    n_bell = shots_to_resolve(bs, [stokes(0, *bc.pair("a")), stokes(0, *bc.pair("b"))])
    gc, _ = planner.ghz_circuit(2, r)
    gst = simulate(gc)
    n_ghz = shots_to_resolve(gst, [stokes(0, *p) for p in gc.mode_map().values()])
    assert n_ghz > n_bell


def test_shots_to_resolve_monotone_in_r():
    prev = math.inf
    for r in (0.2, 0.4, 0.8, 1.6):
        c, s = bell(r)
        n = shots_to_resolve(s, [stokes(0, *c.pair("a")), stokes(0, *c.pair("b"))])
        assert n <= prev
        prev = n


def test_shots_to_resolve_zero_target():
    c, s = bell(0.5)
    assert shots_to_resolve(s, [stokes(1, *c.pair("a")), stokes(2, *c.pair("b"))]) == math.inf


def test_shots_to_resolve_empirical():
    # at the predicted shot count the mean |z| should be close to the target
    c, s = bell(0.3)
    q = [stokes(2, *c.pair("a")), stokes(2, *c.pair("b"))]
    n = int(shots_to_resolve(s, q, z=5))
    zs = [estimate_query(sample_state(s, n, seed=k), q).z for k in range(20)]
    assert 3.5 < np.mean(zs) < 6.5
