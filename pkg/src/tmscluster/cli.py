"""Command-line front end: ``tms <subcommand> ...``.

Exit codes: 0 success, 1 parse error, 2 numeric or physicality failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import planner
from .circuit import simulate
from .dsl import ParseError, parse_circuit, to_dsl
from .fock import oracle_moment, oracle_state
from .moments import (
    cofluctuation,
    expectation,
    moment,
    moment_tensor,
    pearson,
    sigma0_query,
    stabilizer_pattern,
    stabilizer_report,
    variance,
)
from .observables import MomentQuery, stokes
from .sampler import estimate_query, sample_state, shots_to_resolve
from .state import apply_gain, apply_loss

FORMAT_VERSION = "1.0"


def _num(x):
    """JSON-safe float; Python's repr round-trips doubles exactly."""
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return x


def new_report(command: str) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "command": command,
        "queries": [],
        "stabilizers": None,
        "budget": None,
        "summary": {},
    }


# ---------------------------------------------------------------- subcommands


def run_simulate(args) -> dict:
    with open(args.file, encoding="utf-8") as fh:
        doc = parse_circuit(fh.read())
    report = new_report("simulate")
    report["circuit"] = to_dsl(doc.circuit)
    if not doc.queries:
        return report
    s = simulate(doc.circuit)
    f = oracle_state(doc.circuit, args.cutoff) if args.oracle else None
    batch = sample_state(s, args.shots, args.seed) if args.sample else None
    if f is not None:
        report["summary"]["oracle_truncation"] = _num(f.eps_trunc)
    for spec in doc.queries:
        q = spec.bind(doc.circuit)
        row = {"label": spec.label, "centered": spec.centered, "exact": _num(moment(s, q))}
        if f is not None:
            row["oracle"] = _num(oracle_moment(f, q))
        if batch is not None:
            row["sample"] = {k: _num(v) for k, v in estimate_query(batch, q).as_dict().items()}
        report["queries"].append(row)
    return report


def _bell_numbers(s, circuit) -> dict:
    a, b = circuit.pair("a"), circuit.pair("b")
    m = moment_tensor(s, [a, b]).as_matrix().real
    out = {"eta": m[0, 0], "mu": m[0, 3], "nu": m[3, 3]}
    out["pearson_S0"] = pearson(s, stokes(0, *a), stokes(0, *b))
    return {k: _num(v) for k, v in out.items()}


def run_bell(args) -> dict:
    report = new_report("bell")
    r2 = args.r if args.r2 is None else args.r2
    circuit = planner.unequal_bell_circuit(args.r, r2) if args.r2 is not None else planner.bell_circuit(args.r, args.phi)
    s = simulate(circuit)
    a, b = circuit.pair("a"), circuit.pair("b")
    T = moment_tensor(s, [a, b])
    for i in range(4):
        for j in range(4):
            report["queries"].append(
                {"label": f"central S{i}@a S{j}@b", "centered": True, "exact": _num(T.entries[i, j])}
            )
    for name, pair in (("a", a), ("b", b)):
        for k in range(4):
            report["summary"][f"mean_S{k}_{name}"] = _num(expectation(s, stokes(k, *pair)))
    report["summary"].update(_bell_numbers(s, circuit) if args.r > 0 else {})
    if args.rebalance:
        if args.r2 is None:
            raise ValueError("--rebalance needs --r2")
        pre_var = [variance(s, stokes(0, *a)), variance(s, stokes(0, *b))]
        if args.rebalance == "loss":
            t = planner.rebalance_loss(args.r, r2)
            s2 = apply_loss(apply_loss(s, a[0], t), b[0], t)
            report["summary"]["transmissivity"] = _num(t)
        else:
            g = planner.rebalance_gain(args.r, r2)
            s2 = apply_gain(apply_gain(s, a[1], g), b[1], g)
            report["summary"]["gain"] = _num(g)
        after = _bell_numbers(s2, circuit)
        report["summary"].update({f"rebalanced_{k}": v for k, v in after.items()})
        q = [stokes(0, *a), stokes(0, *b)]
        report["summary"]["rebalanced_cofluctuation_post_variances"] = _num(cofluctuation(s2, q))
        report["summary"]["rebalanced_cofluctuation_pre_variances"] = _num(cofluctuation(s2, q, pre_var))
    return report


def run_ghz(args) -> dict:
    report = new_report("ghz")
    circuit, graph = planner.ghz_circuit(args.pairs, args.r)
    s = simulate(circuit)
    q = sigma0_query([circuit.pair(x) for x in circuit.spatial])
    report["summary"] = {
        "pairs": args.pairs,
        "cofluctuation": _num(cofluctuation(s, q)),
        "predicted_cofluctuation": _num(2.0 ** (1 - args.pairs)),
        "variances": [_num(variance(s, o)) for o in q],
        "central_S0_product": _num(moment(s, MomentQuery(tuple(q)))),
    }
    if 2 * len(q) <= 12:
        report["summary"]["shots_to_resolve"] = _num(shots_to_resolve(s, q))
    return report


def run_cluster(args) -> dict:
    report = new_report("cluster")
    if args.kind == "star":
        circuit, graph = planner.star_circuit(args.r)
    elif args.kind == "chain":
        circuit, graph = planner.linear_chain(args.cols, args.r)
    else:
        circuit, graph = planner.grid(args.rows, args.cols, args.r)
    report["summary"] = {
        "vertices": list(graph.vertices),
        "edges": [list(e) for e in graph.edge_list()],
        "leaves": len(graph.leaves),
        "pbs_ops": graph.pbs_ops,
        "predicted_cofluctuation": _num(graph.predicted_cofluctuation()),
        "verifiable": graph.verifiable,
    }
    if args.emit:
        report["circuit"] = to_dsl(circuit)
    if graph.verifiable:
        s = simulate(circuit)
        modes = circuit.mode_map()
        rep = stabilizer_report(s, graph, modes)
        report["stabilizers"] = {k: (_num(v) if isinstance(v, float) else v) for k, v in rep.as_dict().items()}
        report["stabilizers"]["betas"] = [_num(b) for b in rep.betas]
        report["stabilizers"]["cross_terms"] = [_num(b) for b in rep.cross_terms]
        report["stabilizers"]["cofluctuations"] = [_num(b) for b in rep.cofluctuations]
        report["summary"]["cofluctuation"] = _num(cofluctuation(s, sigma0_query(modes.values())))
        if 2 * len(graph.vertices) <= 12:
            shots = []
            for v in graph.vertices:
                pat = stabilizer_pattern(graph, v)
                shots.append(_num(shots_to_resolve(s, [stokes(pat[w], *modes[w]) for w in graph.vertices])))
            report["stabilizers"]["shots_to_resolve"] = shots
    return report


def run_budget(args) -> dict:
    report = new_report("budget")
    report["budget"] = {k: (_num(v) if isinstance(v, float) else v) for k, v in planner.loss_budget(
        args.r, args.pbs_ops, args.feedforward
    ).as_dict().items()}
    return report


# ---------------------------------------------------------------- plumbing


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tms", description="Central-moment statistics of two-mode-squeezed light.")
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a circuit file")
    sim.add_argument("file")
    sim.add_argument("--oracle", action="store_true")
    sim.add_argument("--cutoff", type=int, default=12)
    sim.add_argument("--sample", action="store_true")
    sim.add_argument("--shots", type=int, default=100_000)
    sim.add_argument("--seed", type=int, default=0)
    fmt = sim.add_mutually_exclusive_group()
    fmt.add_argument("--json", dest="fmt", action="store_const", const="json")
    fmt.add_argument("--csv", dest="fmt", action="store_const", const="csv")
    sim.set_defaults(func=run_simulate, fmt="json")

    bell = sub.add_parser("bell", help="TMS-Bell statistics")
    bell.add_argument("--r", type=float, required=True)
    bell.add_argument("--phi", type=float, default=0.0)
    bell.add_argument("--r2", type=float)
    bell.add_argument("--rebalance", choices=("loss", "gain"))
    bell.set_defaults(func=run_bell)

    ghz = sub.add_parser("ghz", help="n-mode TMS-GHZ statistics")
    ghz.add_argument("--pairs", type=int, required=True)
    ghz.add_argument("--r", type=float, required=True)
    ghz.set_defaults(func=run_ghz)

    cl = sub.add_parser("cluster", help="TMS-cluster construction and stabilizers")
    cl.add_argument("--kind", choices=("star", "chain", "grid"), required=True)
    cl.add_argument("--rows", type=int, default=1)
    cl.add_argument("--cols", type=int, default=1)
    cl.add_argument("--r", type=float, required=True)
    cl.add_argument("--emit", action="store_true", help="include the circuit as DSL text")
    cl.set_defaults(func=run_cluster)

    bud = sub.add_parser("budget", help="loss budget for PBS-built clusters")
    bud.add_argument("--r", type=float, required=True)
    bud.add_argument("--pbs-ops", type=int, default=0)
    bud.add_argument("--feedforward", action="store_true")
    bud.set_defaults(func=run_budget)
    return p


def to_csv(report: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["label", "centered", "exact", "oracle", "sample_estimate", "sample_stderr"])
    fmt = lambda x: "" if x is None else (format(x, ".17g") if isinstance(x, float) else str(x))  # noqa: E731
    for row in report["queries"]:
        sample = row.get("sample") or {}
        w.writerow([row["label"], row["centered"], fmt(row["exact"]), fmt(row.get("oracle")),
                    fmt(sample.get("estimate")), fmt(sample.get("stderr"))])
    return buf.getvalue()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        report = args.func(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 1
    except (OSError, UnicodeDecodeError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, ArithmeticError, MemoryError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return 2
    if getattr(args, "fmt", "json") == "csv":
        sys.stdout.write(to_csv(report))
    else:
        json.dump(report, sys.stdout, indent=2)
        sys.stdout.write("\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
