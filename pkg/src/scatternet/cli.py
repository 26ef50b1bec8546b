"""Command-line front end.

Subcommands: ``validate``, ``solve``, ``sweep``, ``star``, ``normalize``.
Exit codes: 0 ok, 1 usage, 2 parse/validation failure, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .errors import (
    BlockStructureError,
    ConvergenceError,
    DisconnectedGraphError,
    HazardError,
    NetworkFormatError,
    NetworkValidationError,
    ResonanceError,
    ScatternetError,
    SingularSystemError,
)
from .graph_model import (
    build_incidence,
    detect_simultaneity_hazard,
    normalize_loops,
    parse_network,
    serialize_network,
    unitarity_defect,
)
from .assembly import assemble
from .redheffer import TwoPortScatterer, chain
from .solver import full_scattering_matrix, solve_by_iteration, solve_steady_state
from .sweep import SweepSpec, default_thread_count, run_sweep, write_records

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3

_VALIDATION_ERRORS = (
    NetworkFormatError,
    NetworkValidationError,
    HazardError,
    DisconnectedGraphError,
    ValueError,
)
_NUMERICAL_ERRORS = (
    SingularSystemError,
    ConvergenceError,
    ResonanceError,
    BlockStructureError,
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="scatternet",
        description="Assemble and solve networks of linear coherent scatterers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a network description")
    p.add_argument("path")

    p = sub.add_parser("solve", help="solve the steady-state output amplitudes")
    p.add_argument("path")
    p.add_argument("-p", "--port", type=int, help="input open-port edge id")
    p.add_argument("--all-ports", action="store_true", help="emit the full S-matrix")
    p.add_argument("--method", choices=["direct", "iterative"], default="direct")
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--max-steps", type=int, default=100_000)
    p.add_argument("--normalize", action="store_true",
                   help="split loops with pass-through nodes before assembling")
    p.add_argument("--format", choices=["text", "json"], default="text")

    p = sub.add_parser("sweep", help="run a parameter sweep from a JSON spec")
    p.add_argument("spec")
    p.add_argument("--threads", type=int, default=None,
                   help="worker count (default: SCATTERNET_THREADS or CPU count)")
    p.add_argument("-o", "--output", default=None, help="override the spec's sink")

    p = sub.add_parser("star", help="compose two-port scatterers (star product)")
    p.add_argument("scatterers", nargs="+",
                   help="files of 8 numbers (row-major re im of [[r,tau],[t,rho]])")
    p.add_argument("--inline", action="store_true",
                   help="arguments are inline 8-number strings, not files")
    p.add_argument("--lossy", action="store_true")

    p = sub.add_parser("normalize", help="write the loop-normalized graph")
    p.add_argument("path")
    p.add_argument("-o", "--output", default=None, help="default: stdout")

    return parser


def cmd_validate(args) -> int:
    try:
        graph = parse_network(Path(args.path).read_text())
    except _VALIDATION_ERRORS as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    inc = build_incidence(graph)
    q = graph.q
    print(f"n={graph.n} d={graph.d} q={q} open={graph.d - q}")
    for s in graph.scatterers:
        defect = unitarity_defect(s.matrix)
        flag = " (lossy)" if s.lossy else ""
        name = f" {s.name}" if s.name else ""
        print(f"node {s.node_id}{name}: {s.dim} ports, "
              f"unitarity defect {defect:.3e}{flag}")
    print("open ports: " + " ".join(
        f"(node {n}, edge {e})" for n, e in inc.open_ports))
    hazards = detect_simultaneity_hazard(graph, inc)
    if hazards:
        for h in hazards:
            print(f"hazard: {h}")
        print("graph is not assemblable; rerun solve with --normalize")
        return EXIT_VALIDATION
    print("ok")
    return EXIT_OK


def cmd_solve(args) -> int:
    graph = parse_network(Path(args.path).read_text())
    if args.normalize:
        graph = normalize_loops(graph)

    if args.all_ports:
        s = full_scattering_matrix(graph)
        open_edges = build_incidence(graph).open_edges
        if args.format == "json":
            doc = {
                "open_edges": list(open_edges),
                "s_matrix": [[[v.real, v.imag] for v in row] for row in s],
            }
            print(json.dumps(doc, indent=1))
        else:
            print("S-matrix (rows/cols ordered by open edge id "
                  + " ".join(map(str, open_edges)) + "):")
            for row in s:
                print("  " + "  ".join(f"{v.real:+.12g}{v.imag:+.12g}j" for v in row))
        return EXIT_OK

    if args.port is None:
        print("solve: a --port is required unless --all-ports is given",
              file=sys.stderr)
        return EXIT_USAGE
    system = assemble(graph, args.port)
    if args.method == "iterative":
        sol = solve_by_iteration(system, args.tol, args.max_steps)
    else:
        sol = solve_steady_state(system)
    if args.format == "json":
        doc = {
            "input_edge": args.port,
            "amplitudes": {str(e): [a.real, a.imag]
                           for e, a in sorted(sol.amplitudes.items())},
            "probabilities": {str(e): abs(a) ** 2
                              for e, a in sorted(sol.amplitudes.items())},
            "residual": sol.residual,
            "condition_estimate": (
                sol.condition_estimate
                if np.isfinite(sol.condition_estimate) else None
            ),
            "iterations": sol.iterations,
        }
        print(json.dumps(doc, indent=1))
    else:
        for e, a in sorted(sol.amplitudes.items()):
            print(f"edge {e}: {a.real:+.17g} {a.imag:+.17g}j  "
                  f"|amp|^2 = {abs(a)**2:.17g}")
        if np.isfinite(sol.condition_estimate):
            print(f"condition estimate: {sol.condition_estimate:.6g}")
        if sol.iterations is not None:
            print(f"iterations: {sol.iterations}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    spec = SweepSpec.from_file(args.spec)
    if args.output is not None:
        spec = SweepSpec(**{**spec.__dict__, "output": args.output})
    records = run_sweep(spec, args.threads or default_thread_count())
    if spec.output:
        write_records(records, spec)
        print(f"wrote {len(records)} records to {spec.output}")
    else:
        from .sweep import records_as_json
        print(json.dumps(records_as_json(records), indent=1))
    failures = sum(1 for r in records if r.status != "ok")
    if failures:
        print(f"{failures} point(s) flagged (singular or non-converged)",
              file=sys.stderr)
    return EXIT_OK


def _read_two_port(source: str, inline: bool, lossy: bool) -> TwoPortScatterer:
    text = source if inline else Path(source).read_text()
    values = [float(t) for t in text.replace(",", " ").split()]
    if len(values) != 8:
        raise ValueError(
            f"expected 8 numbers (row-major re im pairs), got {len(values)}"
        )
    m = np.array(values[0::2]) + 1j * np.array(values[1::2])
    return TwoPortScatterer.from_matrix(m.reshape(2, 2), lossy=lossy)


def cmd_star(args) -> int:
    scatterers = [
        _read_two_port(s, args.inline, args.lossy) for s in args.scatterers
    ]
    result = chain(scatterers)
    m = result.as_matrix()
    for row in m:
        print("  ".join(f"{v.real:+.17g}{v.imag:+.17g}j" for v in row))
    return EXIT_OK


def cmd_normalize(args) -> int:
    graph = parse_network(Path(args.path).read_text())
    text = serialize_network(normalize_loops(graph))
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


_COMMANDS = {
    "validate": cmd_validate,
    "solve": cmd_solve,
    "sweep": cmd_sweep,
    "star": cmd_star,
    "normalize": cmd_normalize,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except _NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except _VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ScatternetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
