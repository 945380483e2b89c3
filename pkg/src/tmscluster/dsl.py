"""Line-oriented circuit description language.

::

    # two-mode squeezed Bell state
    modes 2 polarized a b
    squeeze a.h b.h 0.2 0
    squeeze a.v b.v 0.2 0
    moment central S0@a S0@b

Gate modes are underlying modes (``a.h``/``a.v`` when polarized, the bare
name when plain); ``pbs`` takes spatial names. Observables are ``N`` on an
underlying mode or ``S0``..``S3`` on a polarized spatial mode.
"""

from __future__ import annotations

import string
from dataclasses import dataclass, field

from .circuit import GATE_ARITY, Circuit, Gate
from .observables import MomentQuery, OBSERVABLE_NAMES


class ParseError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.message = message
        self.line = line
        self.column = column


@dataclass(frozen=True)
class QuerySpec:
    """A parsed ``moment`` line before it is bound to mode indices."""

    terms: tuple[tuple[str, str], ...]  # (observable name, target mode)
    centered: bool = True

    @property
    def label(self) -> str:
        kind = "central" if self.centered else "raw"
        return f"{kind} " + " ".join(f"{o}@{m}" for o, m in self.terms)

    def bind(self, circuit: Circuit) -> MomentQuery:
        obs = tuple(circuit.observable(o, m) for o, m in self.terms)
        return MomentQuery(obs, centered=self.centered)


@dataclass
class CircuitDocument:
    circuit: Circuit
    queries: list[QuerySpec] = field(default_factory=list)
    spans: dict = field(default_factory=dict)  # ("gate"|"query", index) -> line number


def _default_names(n: int) -> list[str]:
    if n <= 26:
        return list(string.ascii_lowercase[:n])
    return [f"m{i}" for i in range(n)]


def _tokens(line: str):
    """Whitespace tokens with 1-based start columns."""
    out, col, cur = [], None, ""
    for k, ch in enumerate(line + " "):
        if ch.isspace():
            if cur:
                out.append((cur, col))
                cur = ""
        else:
            if not cur:
                col = k + 1
            cur += ch
    return out


def _number(tok, lineno) -> float:
    text, col = tok
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"expected a number, got {text!r}", lineno, col) from None


def parse_circuit(text: str) -> CircuitDocument:
    circuit: Circuit | None = None
    gates: list[Gate] = []
    queries: list[QuerySpec] = []
    spans: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        toks = _tokens(line)
        if not toks:
            continue
        head, hcol = toks[0]
        args = toks[1:]
        if head == "modes":
            if circuit is not None:
                raise ParseError("modes declared twice", lineno, hcol)
            circuit = _parse_modes(args, lineno, hcol)
            continue
        if circuit is None:
            raise ParseError("modes must be declared before gates and queries", lineno, hcol)
        if head == "moment":
            queries.append(_parse_query(args, lineno, hcol, circuit))
            spans[("query", len(queries) - 1)] = lineno
        elif head in GATE_ARITY:
            gates.append(_parse_gate(head, args, lineno, hcol, circuit))
            spans[("gate", len(gates) - 1)] = lineno
        else:
            raise ParseError(f"unknown gate {head!r}", lineno, hcol)
    if circuit is None:
        circuit = Circuit((), polarized=False)
    return CircuitDocument(Circuit(circuit.spatial, circuit.polarized, tuple(gates)), queries, spans)


def _parse_modes(args, lineno, hcol) -> Circuit:
    if len(args) < 2:
        raise ParseError("usage: modes <n> polarized|plain [names...]", lineno, hcol)
    count_tok, kind_tok = args[0], args[1]
    try:
        n = int(count_tok[0])
    except ValueError:
        raise ParseError(f"mode count must be an integer, got {count_tok[0]!r}", lineno, count_tok[1]) from None
    if n < 1:
        raise ParseError("mode count must be positive", lineno, count_tok[1])
    if kind_tok[0] not in ("polarized", "plain"):
        raise ParseError(f"expected polarized or plain, got {kind_tok[0]!r}", lineno, kind_tok[1])
    names = args[2:]
    if names and len(names) != n:
        raise ParseError(f"declared {n} modes but named {len(names)}", lineno, names[0][1])
    seen = set()
    for name, col in names:
        if name in seen:
            raise ParseError(f"duplicate mode name {name!r}", lineno, col)
        if any(ch in name for ch in ".@#") or name in OBSERVABLE_NAMES:
            raise ParseError(f"invalid mode name {name!r}", lineno, col)
        seen.add(name)
    labels = [t for t, _ in names] or _default_names(n)
    return Circuit(tuple(labels), polarized=kind_tok[0] == "polarized")


def _parse_gate(kind, args, lineno, hcol, circuit: Circuit) -> Gate:
    n_modes, n_params = GATE_ARITY[kind]
    if len(args) != n_modes + n_params:
        raise ParseError(f"{kind} takes {n_modes} modes and {n_params} parameters, got {len(args)} arguments", lineno, hcol)
    mode_toks = args[:n_modes]
    if n_modes == 2 and mode_toks[0][0] == mode_toks[1][0]:
        raise ParseError("gate modes must differ", lineno, mode_toks[1][1])
    for name, col in mode_toks:
        try:
            circuit.pair(name) if kind == "pbs" else circuit.index(name)
        except (KeyError, ValueError) as exc:
            raise ParseError(str(exc).strip("'\""), lineno, col) from None
    params = [_number(t, lineno) for t in args[n_modes:]]
    try:
        gate = Gate(kind, tuple(t for t, _ in mode_toks), tuple(params))
    except ValueError as exc:
        col = args[n_modes][1] if n_params else hcol
        raise ParseError(str(exc), lineno, col) from None
    if kind == "pbs" and len({m for s in gate.modes for m in circuit.pair(s)}) != 4:
        raise ParseError("pbs needs two distinct spatial modes", lineno, hcol)
    return gate


def _parse_query(args, lineno, hcol, circuit: Circuit) -> QuerySpec:
    centered = True
    if args and args[0][0] in ("central", "raw"):
        centered = args[0][0] == "central"
        args = args[1:]
    if not args:
        raise ParseError("moment needs at least one observable", lineno, hcol)
    terms = []
    for tok, col in args:
        if tok.count("@") != 1:
            raise ParseError(f"expected <obs>@<mode>, got {tok!r}", lineno, col)
        obs, mode = tok.split("@")
        if obs not in OBSERVABLE_NAMES:
            raise ParseError(f"unknown observable {obs!r}", lineno, col)
        try:
            circuit.observable(obs, mode)
        except (KeyError, ValueError) as exc:
            raise ParseError(str(exc).strip("'\""), lineno, col) from None
        terms.append((obs, mode))
    spec = QuerySpec(tuple(terms), centered)
    try:
        spec.bind(circuit).check_disjoint()
    except ValueError as exc:
        raise ParseError(str(exc), lineno, hcol) from None
    return spec


def _fmt(x: float) -> str:
    return format(x, ".17g")


def to_dsl(circuit: Circuit, queries=()) -> str:
    """Serialize a circuit (and optional query specs) so that it re-parses exactly."""
    kind = "polarized" if circuit.polarized else "plain"
    lines = [f"modes {len(circuit.spatial)} {kind} " + " ".join(circuit.spatial)]
    for g in circuit.gates:
        lines.append(" ".join([g.kind, *g.modes, *(_fmt(p) for p in g.params)]))
    for q in queries:
        lines.append("moment " + q.label)
    return "\n".join(lines) + "\n"
