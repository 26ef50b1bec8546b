"""Parameter sweep engine: assemble the topology once, solve many points.

The activation structure of a network depends only on its interconnect
topology, not on the scattering values, so a sweep re-instantiates matrices
per grid point while reusing the incidence and activation sequences. Points
are independent and solved concurrently; output ordering is by grid index
regardless of scheduling, so results are byte-identical across thread
counts.
"""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import product
from pathlib import Path

import numpy as np

from .errors import ConvergenceError, ScatternetError, SingularSystemError
from .assembly import assemble, propagate_activations
from .graph_model import (
    build_incidence,
    normalize_loops,
    parse_network,
    template_parameters,
)
from .solver import solve_by_iteration, solve_steady_state

STATUS_OK = "ok"
STATUS_SINGULAR = "singular"
STATUS_NON_CONVERGED = "non-converged"


@dataclass(frozen=True)
class ParameterGrid:
    name: str
    start: float
    stop: float
    count: int

    def __post_init__(self):
        if self.count < 1:
            raise ValueError(f"parameter '{self.name}': count must be >= 1")

    @property
    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.count)


@dataclass(frozen=True)
class SweepSpec:
    """A sweep: network template, per-parameter linear grids, probed ports."""

    network: str  # template text, may contain $name device arguments
    grids: tuple[ParameterGrid, ...]
    ports: tuple[int, ...]
    output: str | None = None
    format: str = "csv"
    method: str = "direct"
    tol: float = 1e-12
    max_steps: int = 100_000
    normalize: bool = False

    def __post_init__(self):
        if self.format not in ("csv", "json"):
            raise ValueError(f"unknown output format '{self.format}'")
        if self.method not in ("direct", "iterative"):
            raise ValueError(f"unknown method '{self.method}'")
        referenced = template_parameters(self.network)
        declared = {g.name for g in self.grids}
        missing = referenced - declared
        if missing:
            raise ValueError(f"template parameters not bound: {sorted(missing)}")

    @classmethod
    def from_file(cls, path: str | Path) -> "SweepSpec":
        with open(path) as fh:
            doc = json.load(fh)
        return cls.from_dict(doc, base_dir=Path(path).parent)

    @classmethod
    def from_dict(cls, doc: dict, base_dir: Path | None = None) -> "SweepSpec":
        if "network" in doc:
            network = doc["network"]
        elif "network_file" in doc:
            p = Path(doc["network_file"])
            if base_dir is not None and not p.is_absolute():
                p = base_dir / p
            network = p.read_text()
        else:
            raise ValueError("sweep spec needs 'network' or 'network_file'")
        grids = tuple(
            ParameterGrid(name, float(g["start"]), float(g["stop"]), int(g["count"]))
            for name, g in doc.get("parameters", {}).items()
        )
        return cls(
            network=network,
            grids=grids,
            ports=tuple(int(p) for p in doc.get("ports", [])),
            output=doc.get("output"),
            format=doc.get("format", "csv"),
            method=doc.get("method", "direct"),
            tol=float(doc.get("tol", 1e-12)),
            max_steps=int(doc.get("max_steps", 100_000)),
            normalize=bool(doc.get("normalize", False)),
        )


@dataclass(frozen=True)
class SweepRecord:
    """One solved (grid point, input port) combination."""

    grid_index: tuple[int, ...]
    params: dict[str, float]
    port: int
    amplitudes: dict[int, complex]  # empty on failure
    condition: float
    status: str


def default_thread_count() -> int:
    env = os.environ.get("SCATTERNET_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_sweep(spec: SweepSpec, threads: int | None = None) -> list[SweepRecord]:
    """Solve every grid point for every probed port.

    Per-point failures (singular systems, non-convergence) are recorded in
    the status flag; they never abort the sweep. Records are ordered by grid
    index, then by port, independent of scheduling.
    """
    if not spec.ports:
        raise ValueError("sweep spec probes no ports")
    threads = threads or default_thread_count()

    names = [g.name for g in spec.grids]
    axes = [g.values for g in spec.grids]
    index_axes = [range(g.count) for g in spec.grids]

    def instantiate(params: dict[str, float]):
        graph = parse_network(spec.network, params)
        if spec.normalize:
            graph = normalize_loops(graph)
        return graph

    # Topology work done once on the first grid point.
    first = dict(zip(names, (a[0] for a in axes))) if names else {}
    g0 = instantiate(first)
    incidence = build_incidence(g0)
    for port in spec.ports:
        incidence.owner_of_open_edge(port)  # raises if not open
    activations = {
        port: propagate_activations(
            g0, incidence.owner_of_open_edge(port), incidence
        )
        for port in set(spec.ports)
    }

    points = list(product(*index_axes)) if names else [()]

    def solve_point(index: tuple[int, ...]) -> list[SweepRecord]:
        params = {n: float(axes[k][index[k]]) for k, n in enumerate(names)}
        graph = instantiate(params)
        out = []
        for port in spec.ports:
            try:
                system = assemble(graph, port, incidence, activations[port])
                if spec.method == "iterative":
                    sol = solve_by_iteration(system, spec.tol, spec.max_steps)
                    cond = float("nan")
                else:
                    sol = solve_steady_state(system)
                    cond = sol.condition_estimate
                out.append(
                    SweepRecord(index, params, port, sol.amplitudes, cond, STATUS_OK)
                )
            except SingularSystemError as exc:
                out.append(
                    SweepRecord(
                        index, params, port, {}, exc.condition_estimate,
                        STATUS_SINGULAR,
                    )
                )
            except ConvergenceError:
                out.append(
                    SweepRecord(
                        index, params, port, {}, float("nan"), STATUS_NON_CONVERGED
                    )
                )
        return out

    if threads == 1:
        batches = [solve_point(i) for i in points]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            batches = list(pool.map(solve_point, points))
    return [rec for batch in batches for rec in batch]


def open_edge_ids(records: list[SweepRecord]) -> list[int]:
    for rec in records:
        if rec.amplitudes:
            return sorted(rec.amplitudes)
    return []


def write_records_csv(records: list[SweepRecord], path: str | Path) -> None:
    edges = open_edge_ids(records)
    names = list(records[0].params) if records else []
    dims = len(records[0].grid_index) if records else 0
    header = (
        [f"index_{n}" for n in names[:dims]]
        + names
        + ["port"]
        + [c for e in edges for c in (f"amp{e}_re", f"amp{e}_im", f"prob{e}")]
        + ["condition", "status"]
    )
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for rec in records:
            row = [str(i) for i in rec.grid_index]
            row += [f"{rec.params[n]:.17g}" for n in names]
            row.append(str(rec.port))
            for e in edges:
                a = rec.amplitudes.get(e)
                if a is None:
                    row += ["nan", "nan", "nan"]
                else:
                    row += [f"{a.real:.17g}", f"{a.imag:.17g}", f"{abs(a)**2:.17g}"]
            row += [f"{rec.condition:.17g}", rec.status]
            w.writerow(row)


def records_as_json(records: list[SweepRecord]) -> list[dict]:
    out = []
    for rec in records:
        out.append(
            {
                "grid_index": list(rec.grid_index),
                "params": rec.params,
                "port": rec.port,
                "amplitudes": {
                    str(e): [a.real, a.imag] for e, a in sorted(rec.amplitudes.items())
                },
                "probabilities": {
                    str(e): abs(a) ** 2 for e, a in sorted(rec.amplitudes.items())
                },
                "condition": rec.condition if np.isfinite(rec.condition) else None,
                "status": rec.status,
            }
        )
    return out


def write_records_json(records: list[SweepRecord], path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(records_as_json(records), fh, indent=1)
        fh.write("\n")


def write_records(records: list[SweepRecord], spec: SweepSpec) -> None:
    if spec.output is None:
        raise ScatternetError("sweep spec has no output path")
    if spec.format == "json":
        write_records_json(records, spec.output)
    else:
        write_records_csv(records, spec.output)
