"""Builders for TMS-Bell, GHZ and cluster circuits plus loss budgets.

Clusters follow the PBS-operation recipe: a polarizing beamsplitter on two
spatial modes followed by a polarization Hadamard on one of them. On the
graph the Hadamard target becomes a leaf hanging off the other mode, which
inherits the target's former neighbors.
"""

from __future__ import annotations

import math
import string
from dataclasses import dataclass, field, replace
from typing import Iterable

from .circuit import Circuit, disjoint_union
from .wick import MAX_QUERY

DB_PER_HALVING = 10 * math.log10(2)  # 3.0103 dB
ROUNDED_DB_PER_HALVING = 3.0


@dataclass(frozen=True)
class ClusterGraph:
    vertices: tuple[str, ...]
    edges: frozenset = frozenset()
    pbs_ops: int = 0
    bell_pairs: int = 0
    equal_betas: bool = True

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(self.vertices))
        edges = frozenset(frozenset(e) for e in self.edges)
        for e in edges:
            if len(e) != 2:
                raise ValueError("self-loops are not allowed")
            if not e <= set(self.vertices):
                raise ValueError(f"edge {tuple(e)} references unknown vertex")
        object.__setattr__(self, "edges", edges)

    def neighbors(self, v) -> list[str]:
        return sorted(w for e in self.edges if v in e for w in e if w != v)

    def degree(self, v) -> int:
        return sum(1 for e in self.edges if v in e)

    @property
    def leaves(self) -> tuple[str, ...]:
        return tuple(v for v in self.vertices if self.degree(v) == 1)

    def component(self, v) -> set[str]:
        seen, stack = {v}, [v]
        while stack:
            for w in self.neighbors(stack.pop()):
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return seen

    def edge_list(self) -> list[tuple[str, str]]:
        order = {v: i for i, v in enumerate(self.vertices)}
        return sorted((tuple(sorted(e, key=order.get)) for e in self.edges), key=lambda p: (order[p[0]], order[p[1]]))

    def predicted_cofluctuation(self) -> float:
        """All-``S0`` co-fluctuation: 1 per Bell pair, halved by each PBS operation."""
        return 2.0 ** (-self.pbs_ops)

    @property
    def verifiable(self) -> bool:
        return len(self.vertices) <= MAX_QUERY

    def union(self, other: "ClusterGraph") -> "ClusterGraph":
        if set(self.vertices) & set(other.vertices):
            raise ValueError("graphs share vertex names")
        return ClusterGraph(
            self.vertices + other.vertices,
            self.edges | other.edges,
            self.pbs_ops + other.pbs_ops,
            self.bell_pairs + other.bell_pairs,
            self.equal_betas and other.equal_betas,
        )


def _names(count: int, prefix: str = "") -> list[str]:
    if not prefix and count <= 26:
        return list(string.ascii_lowercase[:count])
    return [f"{prefix or 'm'}{i}" for i in range(count)]


def bell_circuit(r: float, phi: float = 0.0, names=("a", "b")) -> Circuit:
    if r < 0:
        raise ValueError("squeezing must be non-negative")
    a, b = names
    c = Circuit((a, b), polarized=True)
    c = c.append("squeeze", (f"{a}.h", f"{b}.h"), (r, 0.0))
    return c.append("squeeze", (f"{a}.v", f"{b}.v"), (r, phi))


def unequal_bell_circuit(r1: float, r2: float, names=("a", "b")) -> Circuit:
    """Bell circuit with squeezing ``r1`` on the h pair and ``r2`` on the v pair."""
    a, b = names
    c = Circuit((a, b), polarized=True)
    c = c.append("squeeze", (f"{a}.h", f"{b}.h"), (r1, 0.0))
    return c.append("squeeze", (f"{a}.v", f"{b}.v"), (r2, 0.0))


def cluster2_circuit(r: float, names=("a", "b")) -> tuple[Circuit, ClusterGraph]:
    a, b = names
    c = bell_circuit(r, 0.0, names).append("hadamard", (f"{a}.h", f"{a}.v"))
    return c, ClusterGraph((a, b), {(a, b)}, bell_pairs=1)


def ghz_circuit(k: int, r: float, names=None) -> tuple[Circuit, ClusterGraph]:
    """Ring of ``2k`` spatial modes with squeezers ``S(a_i.h, a_{i+1}.v)``.

    The returned graph records the ring of squeezer links (not a cluster
    graph) and ``k - 1`` PBS operations for co-fluctuation bookkeeping.
    """
    if k < 1:
        raise ValueError("GHZ needs at least one Bell pair")
    n = 2 * k
    names = list(names) if names is not None else _names(n)
    c = Circuit(tuple(names), polarized=True)
    for i in range(n):
        c = c.append("squeeze", (f"{names[i]}.h", f"{names[(i + 1) % n]}.v"), (r, 0.0))
    ring = {(names[i], names[(i + 1) % n]) for i in range(n)} if n > 2 else {(names[0], names[1])}
    return c, ClusterGraph(tuple(names), ring, pbs_ops=k - 1, bell_pairs=k, equal_betas=False)


def pbs_op(
    circuit: Circuit, graph: ClusterGraph, spatial_a: str, spatial_b: str, hadamard_target: str | None = None
) -> tuple[Circuit, ClusterGraph]:
    """PBS on two spatial modes followed by a Hadamard on ``hadamard_target``."""
    target = spatial_a if hadamard_target is None else hadamard_target
    if target not in (spatial_a, spatial_b):
        raise ValueError("hadamard target must be one of the PBS inputs")
    for s in (spatial_a, spatial_b):
        if s not in graph.vertices:
            raise KeyError(f"{s!r} is not a graph vertex")
    if spatial_b in graph.component(spatial_a):
        raise ValueError("PBS operation within one connected cluster is not defined")
    other = spatial_b if target == spatial_a else spatial_a
    c = circuit.append("pbs", (spatial_a, spatial_b)).append("hadamard", (f"{target}.h", f"{target}.v"))
    moved = set(graph.neighbors(target))
    edges = {e for e in graph.edges if target not in e}
    edges |= {frozenset((other, w)) for w in moved if w != other}
    edges.add(frozenset((target, other)))
    return c, replace(graph, edges=frozenset(edges), pbs_ops=graph.pbs_ops + 1)


def _side_by_side(parts: Iterable[tuple[Circuit, ClusterGraph]]) -> tuple[Circuit, ClusterGraph]:
    parts = list(parts)
    circuit = disjoint_union(*(c for c, _ in parts))
    graph = parts[0][1]
    for _, g in parts[1:]:
        graph = graph.union(g)
    return circuit, graph


def star_circuit(r: float, names=("a", "b", "c", "d")) -> tuple[Circuit, ClusterGraph]:
    """Two 2-mode clusters (a-b, c-d) fused on a, c: star centred on c."""
    a, b, c, d = names
    circ, graph = _side_by_side([cluster2_circuit(r, (a, b)), cluster2_circuit(r, (c, d))])
    return pbs_op(circ, graph, a, c, hadamard_target=a)


@dataclass
class _Chain:
    circuit: Circuit
    graph: ClusterGraph
    cores: list[str]
    spare: dict = field(default_factory=dict)  # core -> unused leaves


def _build_chain(n_cores: int, r: float, tag: str) -> _Chain:
    if n_cores < 1:
        raise ValueError("a chain needs at least one core vertex")
    a, b, c, d = (f"{tag}{i}" for i in range(4))
    circ, graph = star_circuit(r, (a, b, c, d))
    cores = [c]
    spare = {c: [a, b, d]}
    unit = 1
    while len(cores) < n_cores:
        end = cores[-1]
        link = spare[end].pop()  # leaf of the current end used for fusion
        if n_cores - len(cores) >= 2:
            names = tuple(f"{tag}{unit}_{i}" for i in range(4))
            sc, sg = star_circuit(r, names)
            new_leaf, new_center = names[3], names[2]
            circ, graph = _side_by_side([(circ, graph), (sc, sg)])
            circ, graph = pbs_op(circ, graph, link, new_leaf, hadamard_target=link)
            cores += [new_leaf, new_center]
            spare[new_leaf] = [link]
            spare[new_center] = [names[0], names[1]]
        else:
            names = (f"{tag}{unit}_0", f"{tag}{unit}_1")
            cc, cg = cluster2_circuit(r, names)
            circ, graph = _side_by_side([(circ, graph), (cc, cg)])
            circ, graph = pbs_op(circ, graph, link, names[1], hadamard_target=link)
            cores.append(names[1])
            spare[names[1]] = [link, names[0]]
        unit += 1
    return _Chain(circ, graph, cores, spare)


def linear_chain(n_cores: int, r: float, tag: str = "") -> tuple[Circuit, ClusterGraph]:
    """Linear cluster with ``n_cores`` non-leaf vertices and ``n_cores + 2`` leaves.

    Built from a star; each further pair of cores comes from fusing a new star
    onto a leaf of the current end, a single core from fusing a 2-mode cluster.
    """
    ch = _build_chain(n_cores, r, tag or "v")
    return ch.circuit, ch.graph


def grid(n: int, m: int, r: float) -> tuple[Circuit, ClusterGraph]:
    """``n`` chains of ``m`` cores joined column-wise into an ``n x m`` cluster.

    Each rung fuses a spare leaf of a core in row ``i`` onto the matching core
    of row ``i + 1``; the leaf moves to the lower core, so the leaf count stays
    ``n (m + 2)``. Graphs wider than the engine's query cap are still emitted
    but are reported as not verifiable.
    """
    if n < 1 or m < 1:
        raise ValueError("grid dimensions must be positive")
    rows = [_build_chain(m, r, f"r{i}v") for i in range(n)]
    circ, graph = _side_by_side((ch.circuit, ch.graph) for ch in rows)
    for i in range(n - 1):
        upper, lower = rows[i], rows[i + 1]
        for j in range(m):
            leaf = upper.spare[upper.cores[j]].pop()
            circ, graph = _pbs_rung(circ, graph, leaf, lower.cores[j])
            lower.spare[lower.cores[j]].append(leaf)
    return circ, graph


def _pbs_rung(circ, graph, leaf, core):
    # rungs connect parts of one component once the first rung exists
    c = circ.append("pbs", (leaf, core)).append("hadamard", (f"{leaf}.h", f"{leaf}.v"))
    moved = set(graph.neighbors(leaf))
    edges = {e for e in graph.edges if leaf not in e}
    edges |= {frozenset((core, w)) for w in moved if w != core}
    edges.add(frozenset((leaf, core)))
    return c, replace(graph, edges=frozenset(edges), pbs_ops=graph.pbs_ops + 1)


# ---------------------------------------------------------------- rebalancing


def rebalance_loss(r1: float, r2: float) -> float:
    """Transmissivity on both strong-arm modes equalizing the Bell tensor corners."""
    if r1 < r2:
        raise ValueError("loss rebalancing needs r1 >= r2")
    if r1 == r2:
        return 1.0
    return math.sinh(2 * r2) / math.sinh(2 * r1)


def rebalance_gain(r1: float, r2: float) -> float:
    """Gain on both weak-arm modes with ``cosh(g)^2 = sinh(2 r1) / sinh(2 r2)``."""
    if r1 < r2:
        raise ValueError("gain rebalancing needs r1 >= r2")
    if r1 == r2:
        return 0.0
    if r2 <= 0:
        raise ValueError("an unsqueezed arm cannot be amplified into balance")
    return math.acosh(math.sqrt(math.sinh(2 * r1) / math.sinh(2 * r2)))


# ---------------------------------------------------------------- budgets


@dataclass(frozen=True)
class BudgetReport:
    r: float
    gamma_max: float
    gamma_max_db: float
    pbs_ops_per_mode: int
    feedforward_postselect: bool
    spent_db: float
    residual_db: float
    residual_db_rounded: float
    mean_photons_per_spatial_mode: float
    feasible: bool

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def loss_budget(r: float, pbs_ops_per_mode: int = 0, feedforward_postselect: bool = False) -> BudgetReport:
    """Per-mode loss tolerance ``gamma >= sqrt2 / sinh(2r)`` and what PBS use spends of it.

    ``residual_db`` uses exact factor-of-two accounting; ``residual_db_rounded``
    uses 3 dB per halving on the tolerance rounded to 0.1 dB.
    """
    if r <= 0:
        raise ValueError("loss budget needs r > 0")
    if pbs_ops_per_mode < 0:
        raise ValueError("PBS operation count must be non-negative")
    gamma = math.sqrt(2) / math.sinh(2 * r)
    gamma_db = 10 * math.log10(gamma)
    halvings = pbs_ops_per_mode + (1 if feedforward_postselect else 0)
    spent = DB_PER_HALVING * halvings
    return BudgetReport(
        r=r,
        gamma_max=gamma,
        gamma_max_db=gamma_db,
        pbs_ops_per_mode=pbs_ops_per_mode,
        feedforward_postselect=feedforward_postselect,
        spent_db=spent,
        residual_db=gamma_db + spent,
        residual_db_rounded=round(gamma_db, 1) + ROUNDED_DB_PER_HALVING * halvings,
        mean_photons_per_spatial_mode=2 * math.sinh(r) ** 2,
        feasible=gamma <= 1.0 and gamma_db + spent <= 0.0,
    )


def scaling_moment(n: int, r: float) -> float:
    """Closed-form ``[sqrt2 sinh r cosh r]^n`` for ``n/2`` independent Bell pairs."""
    if n < 2 or n % 2:
        raise ValueError("scaling law holds only for an even number of spatial modes")
    return (math.sqrt(2) * math.sinh(r) * math.cosh(r)) ** n


def bell_pairs_circuit(k: int, r: float) -> Circuit:
    """``k`` independent Bell states on ``2k`` spatial modes (a-b, c-d, ...)."""
    names = _names(2 * k)
    return disjoint_union(*(bell_circuit(r, 0.0, (names[2 * i], names[2 * i + 1])) for i in range(k)))
