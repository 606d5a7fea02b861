"""Command-line front end: plan, simulate, sweep, cost, route, circuit."""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import analytic, transpile
from .algorithms import SearchSpec, build_circuit, execute
from .circuit import (
    DEFAULT_COST_MODEL,
    MCX_SCHEMES,
    Circuit,
    CircuitError,
    CostModel,
    LinearCost,
    cnot_count,
    depth,
    lower,
)
from .simulator import NoiseModel, ResourceCapExceeded, max_qubits

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_CAP = 0, 2, 3, 4


class InputError(Exception):
    pass


def parse_int_list(text: str) -> list[int]:
    """``"16,24"``, ``"6..10"`` or a mix like ``"4,6..8"``."""
    out: list[int] = []
    try:
        for part in text.split(","):
            part = part.strip()
            if ".." in part:
                lo, hi = part.split("..")
                lo_i, hi_i = int(lo), int(hi)
                if hi_i < lo_i:
                    raise ValueError
                out.extend(range(lo_i, hi_i + 1))
            elif part:
                out.append(int(part))
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid integer list/range {text!r}") from None
    if not out:
        raise argparse.ArgumentTypeError("empty list")
    return out


def _linear(text: str) -> LinearCost:
    try:
        slope, offset = (int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected SLOPE,OFFSET, got {text!r}") from None
    return LinearCost(slope, offset)


def _cost_model(args) -> CostModel:
    cm = DEFAULT_COST_MODEL
    changes = {}
    if getattr(args, "scheme", None):
        changes["mcx_scheme"] = args.scheme
    for flag, fieldname in (
        ("oracle_depth", "oracle_depth_fn"),
        ("diffusion_depth", "diffusion_depth_fn"),
        ("oracle_cnot", "oracle_cnot_fn"),
        ("diffusion_cnot", "diffusion_cnot_fn"),
    ):
        val = getattr(args, flag, None)
        if val is not None:
            changes[fieldname] = val
    return replace(cm, **changes) if changes else cm


def _add_cost_flags(p):
    p.add_argument("--scheme", choices=MCX_SCHEMES, help="MCX lowering scheme")
    p.add_argument("--oracle-depth", type=_linear, metavar="SLOPE,OFFSET")
    p.add_argument("--diffusion-depth", type=_linear, metavar="SLOPE,OFFSET")
    p.add_argument("--oracle-cnot", type=_linear, metavar="SLOPE,OFFSET")
    p.add_argument("--diffusion-cnot", type=_linear, metavar="SLOPE,OFFSET")


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _fmt(x) -> str:
    if x is None:
        return "NA"
    if isinstance(x, float):
        return f"{x:.10g}"
    return str(x)


# ---------------------------------------------------------------------------

def cmd_plan(args) -> int:
    rows = []
    for n in args.n:
        g = analytic.grover_plan(n, args.threshold, args.criterion)
        rows.append([n, "grover", "", g, 0])
        if args.m:
            ms = [(f"E(m={m})", m) for m in args.m]
        else:
            ms = [(f"E(m=n/2-{a})" if a else "E(m=n/2)", n // 2 - a) for a in args.m_offsets]
        for label, m in ms:
            if not 1 <= m < n:
                continue
            k = analytic.plan_iterations(n, m, args.k1, args.k2, args.threshold, args.cap, args.criterion)
            rows.append([n, label, m, _fmt(k), _fmt(None if k is None else k - g)])
    _emit(_csv(["n", "algorithm", "m", "k_total", "diff"], rows), args.out)
    return EXIT_OK


def _spec_from_args(args) -> SearchSpec:
    n = args.n
    target = args.target or "1" * n
    pattern = None
    if args.pattern:
        pattern = args.pattern if args.pattern in ("paper-4q", "paper-6q") else tuple(args.pattern.split(","))
    m = args.m
    if m is None and args.algo == "efficient":
        m = n // 2
    if m is None and args.algo == "partial":
        m = max(1, n - 2)
    tail = args.tail
    if tail is None:
        tail = "extra-first-local" if args.algo == "efficient" and args.k == 1 else "none"
    return SearchSpec(args.algo, n, target, m=m, k=args.k, k1=args.k1, k2=args.k2, tail=tail, pattern=pattern)


def cmd_simulate(args) -> int:
    if args.shots < 1:
        raise InputError("--shots must be >= 1")
    if args.n > max_qubits():
        raise ResourceCapExceeded(f"{args.n} qubits exceeds the cap of {max_qubits()}")
    spec = _spec_from_args(args)
    noise = NoiseModel(args.noise_p1, args.noise_p2, args.readout)
    report = execute(spec, shots=args.shots, seed=args.seed, noise=noise, cost_model=_cost_model(args))
    doc = {"spec": spec.to_dict(), "report": report.to_dict()}
    if args.format == "json":
        doc["counts"] = report.histogram.counts
        _emit(json.dumps(doc, indent=2) + "\n", args.out)
        return EXIT_OK
    if args.out:
        Path(args.out).write_text(report.histogram.to_csv())
        sys.stdout.write(json.dumps(doc, indent=2) + "\n")
    else:
        sys.stdout.write(report.histogram.to_csv())
        sys.stderr.write(json.dumps(doc) + "\n")
    return EXIT_OK


def cmd_sweep(args) -> int:
    rows = []
    for m in args.m:
        if not 1 <= m < args.n:
            raise InputError(f"m={m} invalid for n={args.n}")
        for k1 in args.k1:
            for k2 in args.k2:
                per = k1 + k2
                if args.granularity == "oracle":
                    trace = analytic.oracle_trace(args.n, m, k1, k2, args.k * per)
                    points = list(enumerate(trace))
                else:
                    trace = analytic.evolve(args.n, m, k1, k2, args.k)
                    points = [(j * per, p) for j, p in enumerate(trace)]
                rows += [[args.n, m, k1, k2, kt, _fmt(p)] for kt, p in points]
    _emit(_csv(["n", "m", "k1", "k2", "k_total", "probability"], rows), args.out)
    return EXIT_OK


def cmd_cost(args) -> int:
    cm = _cost_model(args)
    rows = []
    for n in args.n:
        for algo in args.algo:
            r = analytic.med(algo, n, None, cm, args.max_j)
            rows.append([algo, n, r.j_star, r.d_total, _fmt(r.probability), _fmt(r.med)])
    _emit(_csv(["algo", "n", "j_star", "d_total", "probability", "med"], rows), args.out)
    return EXIT_OK


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def cmd_route(args) -> int:
    cm = _cost_model(args)
    try:
        circuit = Circuit.from_json(_read(args.circuit))
        if args.coupling:
            coupling = transpile.CouplingMap.from_json(_read(args.coupling))
        else:
            coupling = transpile.builtin(args.topology)
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON: {exc}") from exc
    low = lower(circuit, cm)
    layout = transpile.make_layout(args.layout, low, coupling)
    res = transpile.route(low, coupling, layout)
    cnot_m, depth_m = transpile.mapped_metrics(res.circuit, cm)
    ok = ""
    if coupling.qubits <= transpile.MAX_VERIFY_WIDTH:
        ok = str(transpile.verify_equivalence(low, res.circuit, res.final_layout, res.initial_layout)).lower()
    if args.out:
        doc = res.circuit.to_dict()
        doc["initial_layout"] = list(res.initial_layout.physical)
        doc["final_layout"] = list(res.final_layout.physical)
        Path(args.out).write_text(json.dumps(doc) + "\n")
    row = [cnot_count(low, cm), cnot_m, depth(low, cm), depth_m, res.swaps, ok]
    sys.stdout.write(_csv(["cnot", "cnot_mapped", "depth", "depth_mapped", "swaps", "equivalent"], [row]))
    return EXIT_OK


def cmd_circuit(args) -> int:
    spec = _spec_from_args(args)
    circ = build_circuit(spec.n, spec.sequence(), [spec.target])
    if args.lowered:
        circ = lower(circ, _cost_model(args))
    _emit(circ.to_json() + "\n", args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------

def _add_search_flags(p):
    p.add_argument("--algo", choices=("grover", "partial", "efficient"), required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--k1", type=int, default=1)
    p.add_argument("--k2", type=int, default=1)
    p.add_argument("--tail", choices=("none", "extra-first-local"))
    p.add_argument("--pattern", help="paper-4q, paper-6q or a comma list of local/global")
    p.add_argument("--target", help="n-bit target, qubit 0 first (default all ones)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="localsearch", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="oracle calls needed to reach a success threshold")
    p.add_argument("--n", type=parse_int_list, required=True)
    p.add_argument("--m", type=parse_int_list, help="explicit first-subset sizes")
    p.add_argument("--m-offsets", type=parse_int_list, default=[4, 2, 0], help="m = n//2 - offset")
    p.add_argument("--k1", type=int, default=1)
    p.add_argument("--k2", type=int, default=1)
    p.add_argument("--threshold", type=float, default=0.98)
    p.add_argument("--criterion", choices=analytic.CRITERIA, default="amplitude")
    p.add_argument("--cap", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("simulate", help="run one search and sample it")
    _add_search_flags(p)
    p.add_argument("--shots", type=int, default=8192)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise-p1", type=float, default=0.0)
    p.add_argument("--noise-p2", type=float, default=0.0)
    p.add_argument("--readout", type=float, default=0.0)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out")
    _add_cost_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="analytic probability traces")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=parse_int_list, required=True)
    p.add_argument("--k1", type=parse_int_list, default=[1])
    p.add_argument("--k2", type=parse_int_list, default=[1])
    p.add_argument("--k", type=int, default=30, help="number of (k1+k2) steps")
    p.add_argument("--granularity", choices=("step", "oracle"), default="step")
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("cost", help="minimum expected depth per algorithm")
    p.add_argument("--n", type=parse_int_list, required=True)
    p.add_argument("--algo", type=lambda s: s.split(","), default=["grover", "partial", "efficient"])
    p.add_argument("--max-j", type=int)
    p.add_argument("--out")
    _add_cost_flags(p)
    p.set_defaults(func=cmd_cost)

    p = sub.add_parser("route", help="map a circuit onto a coupling map")
    p.add_argument("--circuit", required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--coupling", help="coupling map JSON file")
    g.add_argument("--topology", help="casablanca, line:K, ring:K, full:K, grid:RxC")
    p.add_argument("--layout", choices=("trivial", "degree"), default="trivial")
    p.add_argument("--out")
    _add_cost_flags(p)
    p.set_defaults(func=cmd_route)

    p = sub.add_parser("circuit", help="emit the circuit JSON of a search")
    _add_search_flags(p)
    p.add_argument("--lowered", action="store_true")
    p.add_argument("--out")
    _add_cost_flags(p)
    p.set_defaults(func=cmd_circuit)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        if hasattr(args, "algo") and isinstance(args.algo, list):
            bad = [a for a in args.algo if a not in ("grover", "partial", "efficient")]
            if bad:
                sys.stderr.write(f"localsearch: unknown algorithm(s) {bad}\n")
                return EXIT_USAGE
        return args.func(args)
    except ResourceCapExceeded as exc:
        sys.stderr.write(f"localsearch: {exc}\n")
        return EXIT_CAP
    except (InputError, CircuitError, transpile.RoutingError, ValueError) as exc:
        sys.stderr.write(f"localsearch: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
