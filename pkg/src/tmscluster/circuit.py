"""Gate sequences over named modes and their Gaussian simulation."""

from __future__ import annotations

from dataclasses import dataclass, field

from . import state as gs
from .observables import QuadraticObservable, number, stokes

GATE_ARITY = {
    # kind: (mode count, parameter count)
    "squeeze": (2, 2),
    "hadamard": (2, 0),
    "bs": (2, 2),
    "pbs": (2, 0),
    "loss": (1, 1),
    "gain": (1, 1),
    "swap": (2, 0),
}
PASSIVE = {"hadamard", "bs", "pbs", "swap"}


@dataclass(frozen=True)
class Gate:
    kind: str
    modes: tuple[str, ...]
    params: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in GATE_ARITY:
            raise ValueError(f"unknown gate {self.kind!r}")
        nm, npar = GATE_ARITY[self.kind]
        object.__setattr__(self, "modes", tuple(self.modes))
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if len(self.modes) != nm or len(self.params) != npar:
            raise ValueError(f"{self.kind} takes {nm} modes and {npar} parameters")
        if nm == 2 and self.modes[0] == self.modes[1]:
            raise ValueError("gate modes must differ")
        if self.kind == "squeeze" and self.params[0] < 0:
            raise ValueError("squeezing r must be non-negative")
        if self.kind == "loss" and not 0 <= self.params[0] <= 1:
            raise ValueError("loss transmissivity must lie in [0, 1]")
        if self.kind == "gain" and self.params[0] < 0:
            raise ValueError("gain must be non-negative")


@dataclass(frozen=True)
class Circuit:
    """Ordered gates on a mode registry.

    ``spatial`` lists spatial-mode names. Polarized circuits give each spatial
    mode ``name`` two underlying modes ``name.h`` and ``name.v``; plain ones
    use the spatial name itself. ``pbs`` gates reference spatial names, all
    other gates reference underlying modes.
    """

    spatial: tuple[str, ...]
    polarized: bool = True
    gates: tuple[Gate, ...] = ()
    reflection_phase: bool = field(default=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "spatial", tuple(self.spatial))
        object.__setattr__(self, "gates", tuple(self.gates))
        if len(set(self.spatial)) != len(self.spatial):
            raise ValueError("duplicate mode names")
        for g in self.gates:
            self._check_gate(g)

    @property
    def modes(self) -> tuple[str, ...]:
        if not self.polarized:
            return self.spatial
        return tuple(f"{s}.{p}" for s in self.spatial for p in "hv")

    def index(self, mode: str) -> int:
        try:
            return self.modes.index(mode)
        except ValueError:
            raise KeyError(f"unknown mode {mode!r}") from None

    def pair(self, spatial: str) -> tuple[int, int]:
        """``(h, v)`` indices of a polarized spatial mode."""
        if not self.polarized:
            raise ValueError("plain circuits have no polarization pairs")
        if spatial not in self.spatial:
            raise KeyError(f"unknown spatial mode {spatial!r}")
        return self.index(f"{spatial}.h"), self.index(f"{spatial}.v")

    def mode_map(self) -> dict[str, tuple[int, int]]:
        return {s: self.pair(s) for s in self.spatial}

    def _check_gate(self, g: Gate) -> None:
        if g.kind == "pbs":
            for s in g.modes:
                self.pair(s)
        else:
            for m in g.modes:
                self.index(m)

    def append(self, kind: str, modes, params=()) -> "Circuit":
        g = Gate(kind, tuple(modes), tuple(params))
        self._check_gate(g)
        return Circuit(self.spatial, self.polarized, self.gates + (g,), self.reflection_phase)

    def oracle_compatible(self) -> bool:
        """Squeezers come before every other gate."""
        seen_other = False
        for g in self.gates:
            if g.kind == "squeeze":
                if seen_other:
                    return False
            else:
                seen_other = True
        return True

    def observable(self, name: str, target: str) -> QuadraticObservable:
        """``N@mode`` or ``S<k>@spatial`` as a quadratic observable."""
        if name == "N":
            if target in self.spatial and self.polarized:
                raise ValueError("N needs an underlying mode such as a.h; use S0 for total intensity")
            return number(self.index(target), label=f"N@{target}")
        if len(name) == 2 and name[0] == "S" and name[1] in "0123":
            h, v = self.pair(target)
            return stokes(int(name[1]), h, v, name=target)
        raise ValueError(f"unknown observable {name!r}")


def disjoint_union(*circuits: Circuit) -> Circuit:
    """Place circuits side by side; squeezers of all parts are moved first."""
    if not circuits:
        raise ValueError("nothing to combine")
    polar = {c.polarized for c in circuits}
    if len(polar) != 1:
        raise ValueError("cannot mix polarized and plain circuits")
    spatial = tuple(s for c in circuits for s in c.spatial)
    squeezers = tuple(g for c in circuits for g in c.gates if g.kind == "squeeze")
    others = tuple(g for c in circuits for g in c.gates if g.kind != "squeeze")
    # parts act on disjoint modes, so this reordering leaves the state unchanged
    return Circuit(spatial, polar.pop(), squeezers + others)


def simulate(circuit: Circuit, s: gs.GaussianState | None = None) -> gs.GaussianState:
    """Run the circuit on vacuum (or on ``s``) in the Gaussian representation."""
    if s is None:
        s = gs.new_vacuum(len(circuit.modes))
    idx = circuit.index
    for g in circuit.gates:
        if g.kind == "squeeze":
            s = gs.apply_squeezer(s, idx(g.modes[0]), idx(g.modes[1]), *g.params)
        elif g.kind == "hadamard":
            s = gs.apply_hadamard(s, idx(g.modes[0]), idx(g.modes[1]))
        elif g.kind == "bs":
            s = gs.apply_beamsplitter(s, idx(g.modes[0]), idx(g.modes[1]), *g.params)
        elif g.kind == "swap":
            s = gs.apply_swap(s, idx(g.modes[0]), idx(g.modes[1]))
        elif g.kind == "pbs":
            s = gs.apply_pbs(s, circuit.pair(g.modes[0]), circuit.pair(g.modes[1]), circuit.reflection_phase)
        elif g.kind == "loss":
            s = gs.apply_loss(s, idx(g.modes[0]), g.params[0])
        elif g.kind == "gain":
            s = gs.apply_gain(s, idx(g.modes[0]), g.params[0])
    return s
