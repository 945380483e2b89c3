"""Acceptance criteria; each test prints one PASS/FAIL line."""

import math

import numpy as np
import pytest

from tmscluster import planner, state as gs
from tmscluster.circuit import Circuit, simulate
from tmscluster.fock import oracle_moment, oracle_state
from tmscluster.moments import (
    central_moment,
    central_moment_inclusion_exclusion,
    cofluctuation,
    covariance,
    expectation,
    moment_tensor,
    pearson,
    raw_moment,
    sigma0_query,
    stabilizer_report,
    variance,
)
from tmscluster.observables import MomentQuery, number, stokes
from tmscluster.sampler import estimate_query, sample_state
from tmscluster.wick import brute_force_moment

from conftest import PHYSICALITY_LOG, random_observables, random_state, record, tmsv


def sc(r):
    return math.sinh(r), math.cosh(r)


def check(criterion, title, ok, detail=""):
    record(criterion, title, bool(ok), detail)
    assert ok, f"criterion {criterion} failed: {detail}"


def test_c01_pearson_unity():
    worst_p, worst_cov = 0.0, 0.0
    for r in (0.1, 1.0, 2.3):
        _, s = tmsv(r)
        worst_p = max(worst_p, abs(pearson(s, number(0), number(1)) - 1))
        h = gs.apply_hadamard(s, 0, 1)
        worst_cov = max(worst_cov, abs(covariance(h, number(0), number(1))))
    check(1, "Pearson unity and Hadamard decorrelation", worst_p <= 1e-10 and worst_cov <= 1e-12,
          f"max |p-1|={worst_p:.2e}, max |cov|={worst_cov:.2e}")


def test_c02_bell_stokes_table():
    r = 0.7
    s_, c_ = sc(r)
    c = planner.bell_circuit(r)
    st = simulate(c)
    a, b = c.pair("a"), c.pair("b")
    base = 2 * s_**2 * c_**2
    diag = [raw_moment(st, [stokes(k, *a), stokes(k, *b)]) for k in range(4)]
    expect = [base + 4 * s_**4, base, base, -base]
    diag_err = max(abs(x - y) / abs(y) for x, y in zip(diag, expect))
    cross = max(abs(raw_moment(st, [stokes(i, *a), stokes(j, *b)])) for i in range(4) for j in range(4) if i != j)
    central = [central_moment(st, [stokes(k, *a), stokes(k, *b)]) for k in range(4)]
    bal = max(abs(abs(x) - base) for x in central)
    ok = diag_err < 1e-10 and diag[3] < 0 and cross < 1e-12 and bal <= 1e-10
    check(2, "Bell Stokes table", ok, f"diag rel err {diag_err:.1e}, S3S3={diag[3]:.4f}, max cross {cross:.1e}, balance {bal:.1e}")


def test_c03_polarization_means():
    worst = 0.0
    for r in (0.3, 1.5):
        c = planner.bell_circuit(r)
        st = simulate(c)
        for name in "ab":
            p = c.pair(name)
            worst = max(worst, abs(expectation(st, stokes(0, *p)) - 2 * math.sinh(r) ** 2))
            worst = max(worst, *(abs(expectation(st, stokes(k, *p))) for k in (1, 2, 3)))
    check(3, "polarization means", worst <= 1e-12, f"max err {worst:.1e}")


def test_c04_rebalancing():
    r1, r2 = 1.0, 0.6
    c = planner.unequal_bell_circuit(r1, r2)
    s0 = simulate(c)
    a, b = c.pair("a"), c.pair("b")
    t = math.sinh(1.2) / math.sinh(2.0)
    g = math.acosh(math.sqrt(math.sinh(2.0) / math.sinh(1.2)))
    results = {}
    for kind, st in (
        ("loss", gs.apply_loss(gs.apply_loss(s0, a[0], t), b[0], t)),
        ("gain", gs.apply_gain(gs.apply_gain(s0, a[1], g), b[1], g)),
    ):
        m = moment_tensor(st, [a, b]).as_matrix().real
        spread = max(m[0, 0], m[0, 3], m[3, 3]) - min(m[0, 0], m[0, 3], m[3, 3])
        p = pearson(st, stokes(0, *a), stokes(0, *b))
        results[kind] = (spread, p)
    ok = all(sp <= 1e-9 and p < 1 for sp, p in results.values())
    detail = ", ".join(f"{k}: spread {sp:.1e} pearson {p:.4f}" for k, (sp, p) in results.items())
    check(4, "loss/gain rebalancing", ok, detail)


def test_c05_ghz_pattern():
    r = 0.5
    delta = (math.sinh(r) * math.cosh(r)) ** 4
    c, _ = planner.ghz_circuit(2, r)
    st = simulate(c)
    pairs = list(c.mode_map().values())
    var_err = max(abs(variance(st, stokes(0, *p)) - 2 * math.sqrt(delta)) for p in pairs)
    T = moment_tensor(st, pairs)
    nz = T.nonzero(1e-10)
    mag_err = max(abs(abs(T.entries[i]) - 2 * delta) for i in nz)
    cof = cofluctuation(st, sigma0_query(pairs))
    ks = []
    for k in (1, 2, 3):
        ck, _ = planner.ghz_circuit(k, r)
        ks.append(abs(cofluctuation(simulate(ck), sigma0_query(ck.mode_map().values())) - 2.0 ** (1 - k)))
    ok = var_err <= 1e-10 and mag_err <= 1e-10 and abs(cof - 0.5) <= 1e-10 and max(ks) <= 1e-10
    check(5, "GHZ pattern and co-fluctuation", ok,
          f"{len(nz)} nonzero entries, var err {var_err:.1e}, |2delta| err {mag_err:.1e}, cof {cof:.12f}, k=1..3 err {max(ks):.1e}")


def test_c06_cluster_stabilizers():
    r = 0.5
    sd = (math.sinh(r) * math.cosh(r)) ** 2
    c2, _ = planner.cluster2_circuit(r)
    s2 = simulate(c2)
    a, b = c2.pair("a"), c2.pair("b")
    e1 = abs(central_moment(s2, [stokes(2, *a), stokes(1, *b)]) - 2 * sd)
    e2 = abs(central_moment(s2, [stokes(1, *a), stokes(2, *b)]) - 2 * sd)

    pre_c, _ = planner._side_by_side([planner.cluster2_circuit(r, ("a", "b")), planner.cluster2_circuit(r, ("c", "d"))])
    q = sigma0_query(pre_c.mode_map().values())
    pre = cofluctuation(simulate(pre_c), q)
    star, graph = planner.star_circuit(r)
    st = simulate(star)
    rep = stabilizer_report(st, graph, star.mode_map(), equal_tol=1e-9)
    post = cofluctuation(st, q)
    spread = max(rep.betas) - min(rep.betas)
    ok = e1 <= 1e-10 and e2 <= 1e-10 and rep.nonzero and spread <= 1e-9 and abs(post - pre / 2) <= 1e-10
    check(6, "cluster stabilizers", ok,
          f"2-mode err {max(e1, e2):.1e}, star betas {rep.betas[0]:.6f} spread {spread:.1e}, cof {pre:.6f}->{post:.6f}")


def test_c07_scaling_law():
    worst = 0.0
    for n, r in ((2, 1.0), (4, 1.0), (10, 0.4)):
        c = planner.bell_pairs_circuit(n // 2, r)
        val = central_moment(simulate(c), sigma0_query(c.mode_map().values()))
        ref = planner.scaling_moment(n, r)
        worst = max(worst, abs(val - ref) / ref)
    check(7, "scaling law of the all-S0 central moment", worst <= 1e-9, f"max rel err {worst:.1e}")


def test_c08_loss_budget():
    base = planner.loss_budget(2.3)
    three = planner.loss_budget(2.3, 3)
    ff = planner.loss_budget(2.3, 3, True)
    ok = (
        round(base.gamma_max, 5) == 0.02843
        and round(base.gamma_max_db, 2) == -15.46
        and round(base.mean_photons_per_spatial_mode) == 49
        and round(three.residual_db_rounded, 1) == -6.5
        and round(ff.residual_db_rounded, 1) == -3.5
    )
    check(8, "loss budget at r = 2.3", ok,
          f"gamma {base.gamma_max:.5f} ({base.gamma_max_db:.2f} dB), {base.mean_photons_per_spatial_mode:.1f} photons, "
          f"3 ops {three.residual_db_rounded:.1f} dB (exact {three.residual_db:.2f}), "
          f"+ff {ff.residual_db_rounded:.1f} dB (exact {ff.residual_db:.2f})")


def _random_oracle_circuit(rng):
    c = Circuit(("a", "b", "c"), polarized=True)
    modes = list(c.modes)
    free = list(modes)
    rng.shuffle(free)
    for _ in range(int(rng.integers(1, 4))):
        i, j = free.pop(), free.pop()
        c = c.append("squeeze", (i, j), (rng.uniform(0, 0.3), rng.uniform(0, 2 * np.pi)))
    for _ in range(int(rng.integers(0, 5))):
        kind = rng.choice(["bs", "hadamard", "pbs", "swap"])
        if kind == "pbs":
            x, y = rng.choice(c.spatial, 2, replace=False)
            c = c.append("pbs", (str(x), str(y)))
        else:
            x, y = rng.choice(modes, 2, replace=False)
            params = (rng.uniform(0, np.pi), rng.uniform(0, 2 * np.pi)) if kind == "bs" else ()
            c = c.append(str(kind), (str(x), str(y)), params)
    roll = rng.integers(3)
    if roll == 1:
        c = c.append("loss", (str(rng.choice(modes)),), (rng.uniform(0, 1),))
    elif roll == 2:
        c = c.append("gain", (str(rng.choice(modes)),), (rng.uniform(0, 0.3),))
    return c


def _degree4_queries(c):
    pairs = c.mode_map()
    names = list(pairs)
    out = []
    for x in names:  # single Stokes means and variances
        for k in range(4):
            out.append([stokes(k, *pairs[x])])
            out.append([stokes(k, *pairs[x]), stokes(k, *pairs[x])])
    for i, x in enumerate(names):
        for y in names[i + 1 :]:
            for k in range(4):
                for l in range(4):
                    out.append([stokes(k, *pairs[x]), stokes(l, *pairs[y])])
    for i in range(len(c.modes)):
        for j in range(i, len(c.modes)):
            out.append([number(i), number(j)])
    return out


def test_c09_oracle_equivalence():
    rng = np.random.default_rng(2024)
    bad, checked, worst = 0, 0, 0.0
    for _ in range(200):
        c = _random_oracle_circuit(rng)
        st = simulate(c)
        f = oracle_state(c, 12)
        cache = {}
        for q in _degree4_queries(c):
            e = central_moment(st, q)
            o = oracle_moment(f, MomentQuery(tuple(q)), cache)
            err = abs(o - e)
            checked += 1
            if not (err <= 1e-6 * abs(e) or err <= 1e-10):
                bad += 1
            worst = max(worst, err / max(abs(e), 1e-4))
    check(9, "engine vs Fock oracle on 200 random circuits", bad == 0,
          f"{checked} moments, {bad} disagreements, worst scaled err {worst:.1e}")


def test_c10_wick_formulations():
    rng = np.random.default_rng(77)
    worst = 0.0
    for _ in range(100):
        M = int(rng.integers(2, 7))
        st = random_state(rng, M)
        obs = random_observables(rng, M, int(rng.integers(1, 5)))
        excl = brute_force_moment(st.N, st.A, obs, exclude_self=True).real
        incl = central_moment_inclusion_exclusion(st, obs)
        fast = central_moment(st, obs)
        scale = max(abs(incl), 1e-300)
        worst = max(worst, abs(excl - incl) / scale if abs(incl) > 1e-12 else abs(excl - incl))
        worst = max(worst, abs(fast - incl) / scale if abs(incl) > 1e-12 else abs(fast - incl))
    check(10, "self-pairing exclusion vs inclusion-exclusion", worst <= 1e-9, f"max rel diff {worst:.1e}")


def test_c11_sampler_convergence():
    c = planner.bell_circuit(1.0)
    st = simulate(c)
    a, b = c.pair("a"), c.pair("b")
    queries = {f"S{i}S{j}": [stokes(i, *a), stokes(j, *b)] for i, j in ((0, 0), (1, 1), (2, 2), (3, 3), (1, 2), (0, 3))}
    exact = {k: central_moment(st, q) for k, q in queries.items()}
    hits = {k: 0 for k in queries}
    for rep in range(100):
        batch = sample_state(st, 100_000, seed=10_000 + rep)
        for k, q in queries.items():
            e = estimate_query(batch, q)
            hits[k] += abs(e.estimate - exact[k]) < 5 * e.stderr
    cover_ok = all(h >= 99 for h in hits.values())

    q = queries["S0S0"]
    small = np.mean([estimate_query(sample_state(st, 1_000, seed=500 + k), q).stderr for k in range(100)])
    large = np.mean([estimate_query(sample_state(st, 100_000, seed=900 + k), q).stderr for k in range(20)])
    ratio = (small / large) / 10.0
    ok = cover_ok and 0.8 <= ratio <= 1.2
    check(11, "sampler coverage and stderr scaling", ok,
          f"coverage {min(hits.values())}/100 worst query, stderr ratio / sqrt(100) = {ratio:.3f}")


@pytest.mark.run_last
def test_c12_physicality_everywhere():
    # every state built in the whole session went through GaussianState.check
    sweep_ok = True
    rng = np.random.default_rng(3)
    for _ in range(50):
        st = random_state(rng, 6, n_squeeze=4, n_passive=6, r_max=2.0)
        sweep_ok &= gs.physicality_margin(st.N, st.A) >= -1e-10
    count, worst = PHYSICALITY_LOG["count"], PHYSICALITY_LOG["worst"]
    ok = sweep_ok and count > 0 and worst >= -1e-10
    check(12, "physicality of every constructed state", ok, f"{count} states, worst margin {worst:.2e}, {PHYSICALITY_LOG['rejected']} rejected")
