import numpy as np
import pytest

from tmscluster import state as gs
from tmscluster.circuit import Circuit, simulate

ACCEPTANCE_LINES: list[str] = []
PHYSICALITY_LOG = {"count": 0, "worst": np.inf, "rejected": 0}

_original_check = gs.GaussianState.check


def _logging_check(self, tol=None):
    # every constructed state passes through check(); record accepted margins
    try:
        out = _original_check(self, tol)
    except gs.PhysicalityError:
        # deliberately bad inputs from negative tests never become states
        PHYSICALITY_LOG["rejected"] += 1
        raise
    PHYSICALITY_LOG["count"] += 1
    margin = gs.physicality_margin(self.N, self.A)
    PHYSICALITY_LOG["worst"] = min(PHYSICALITY_LOG["worst"], margin)
    return out


gs.GaussianState.check = _logging_check


def record(criterion: int, title: str, ok: bool, detail: str = "") -> None:
    line = f"criterion {criterion:2d} [{'PASS' if ok else 'FAIL'}] {title}"
    if detail:
        line += f" ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def tmsv(r, phi=0.0):
    c = Circuit(("a", "b"), polarized=False).append("squeeze", ("a", "b"), (r, phi))
    return c, simulate(c)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_state(rng, M, n_squeeze=3, n_passive=4, channel=True, r_max=0.8):
    s = gs.new_vacuum(M)
    for _ in range(n_squeeze):
        i, j = rng.choice(M, 2, replace=False)
        s = gs.apply_squeezer(s, int(i), int(j), rng.uniform(0, r_max), rng.uniform(0, 2 * np.pi))
    for _ in range(n_passive):
        i, j = rng.choice(M, 2, replace=False)
        s = gs.apply_beamsplitter(s, int(i), int(j), rng.uniform(0, np.pi), rng.uniform(0, 2 * np.pi))
    if channel:
        i = int(rng.integers(M))
        if rng.random() < 0.5:
            s = gs.apply_loss(s, i, rng.uniform(0, 1))
        else:
            s = gs.apply_gain(s, i, rng.uniform(0, 0.5))
    return s


def random_hermitian(rng, k):
    X = rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k))
    return (X + X.conj().T) / 2


def random_observables(rng, M, q):
    """``q`` observables on disjoint random mode pairs (or single modes)."""
    from tmscluster.observables import QuadraticObservable, number, stokes

    perm = [int(x) for x in rng.permutation(M)]
    out = []
    while len(out) < q and perm:
        kind = rng.integers(3)
        if kind == 0 or len(perm) < 2:
            out.append(number(perm.pop()))
        elif kind == 1:
            h, v = perm.pop(), perm.pop()
            out.append(stokes(int(rng.integers(4)), h, v))
        else:
            h, v = perm.pop(), perm.pop()
            out.append(QuadraticObservable((h, v), random_hermitian(rng, 2), spatial=(h, v)))
    return out


def pytest_collection_modifyitems(config, items):
    # physicality audit must see every state built by the rest of the suite
    last = [it for it in items if it.get_closest_marker("run_last")]
    rest = [it for it in items if not it.get_closest_marker("run_last")]
    items[:] = rest + last
