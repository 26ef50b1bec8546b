"""HTTP front end: the same operations as the CLI behind a FastAPI app.

Complex numbers cross the wire as ``[re, im]`` pairs. Validation problems
map to 422, numerical failures (singular systems, non-convergence,
resonances) to 409.

Run with ``uvicorn scatternet.service:app``.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

import numpy as np

from .errors import (
    ConvergenceError,
    DisconnectedGraphError,
    HazardError,
    NetworkFormatError,
    NetworkValidationError,
    ResonanceError,
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
from .sweep import ParameterGrid, SweepSpec, records_as_json, run_sweep

app = FastAPI(
    title="scatternet",
    description="Steady-state scattering of networks of linear coherent scatterers",
)

Pair = tuple[float, float]


class NetworkRequest(BaseModel):
    network: str


class ValidateResponse(BaseModel):
    valid: bool
    n: int | None = None
    d: int | None = None
    q: int | None = None
    open_ports: list[tuple[int, int]] = []
    unitarity_defects: dict[int, float] = {}
    hazards: list[str] = []
    errors: list[str] = []


class SolveRequest(BaseModel):
    network: str
    input_edge: int | None = None
    all_ports: bool = False
    method: str = Field("direct", pattern="^(direct|iterative)$")
    tol: float = 1e-12
    max_steps: int = 100_000
    normalize: bool = False


class SolveResponse(BaseModel):
    input_edge: int | None = None
    amplitudes: dict[int, Pair] = {}
    probabilities: dict[int, float] = {}
    residual: float | None = None
    condition_estimate: float | None = None
    iterations: int | None = None
    open_edges: list[int] = []
    s_matrix: list[list[Pair]] | None = None


class GridModel(BaseModel):
    start: float
    stop: float
    count: int = Field(ge=1)


class SweepRequest(BaseModel):
    network: str
    parameters: dict[str, GridModel] = {}
    ports: list[int]
    method: str = Field("direct", pattern="^(direct|iterative)$")
    tol: float = 1e-12
    max_steps: int = 100_000
    normalize: bool = False
    threads: int | None = None


class SweepResponse(BaseModel):
    records: list[dict]


class StarRequest(BaseModel):
    scatterers: list[list[list[Pair]]]  # each a 2x2 of [re, im]
    lossy: bool = False


class StarResponse(BaseModel):
    matrix: list[list[Pair]]


class NormalizeResponse(BaseModel):
    network: str
    n: int
    d: int


_VALIDATION = (
    NetworkFormatError,
    NetworkValidationError,
    HazardError,
    DisconnectedGraphError,
    ValueError,
)
_NUMERICAL = (SingularSystemError, ConvergenceError, ResonanceError)


def _pair(z: complex) -> Pair:
    return (float(z.real), float(z.imag))


@app.post("/validate", response_model=ValidateResponse)
def validate(req: NetworkRequest) -> ValidateResponse:
    try:
        graph = parse_network(req.network)
    except _VALIDATION as exc:
        return ValidateResponse(valid=False, errors=[str(exc)])
    inc = build_incidence(graph)
    hazards = detect_simultaneity_hazard(graph, inc)
    return ValidateResponse(
        valid=not hazards,
        n=graph.n,
        d=graph.d,
        q=graph.q,
        open_ports=list(inc.open_ports),
        unitarity_defects={
            s.node_id: unitarity_defect(s.matrix) for s in graph.scatterers
        },
        hazards=[str(h) for h in hazards],
    )


@app.post("/solve", response_model=SolveResponse)
def solve(req: SolveRequest) -> SolveResponse:
    try:
        graph = parse_network(req.network)
        if req.normalize:
            graph = normalize_loops(graph)
        if req.all_ports:
            s = full_scattering_matrix(graph)
            open_edges = list(build_incidence(graph).open_edges)
            return SolveResponse(
                open_edges=open_edges,
                s_matrix=[[_pair(v) for v in row] for row in s],
            )
        if req.input_edge is None:
            raise ValueError("input_edge is required unless all_ports is set")
        system = assemble(graph, req.input_edge)
        if req.method == "iterative":
            sol = solve_by_iteration(system, req.tol, req.max_steps)
        else:
            sol = solve_steady_state(system)
    except _VALIDATION as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from None
    except _NUMERICAL as exc:
        raise HTTPException(status_code=409, detail=str(exc)) from None
    cond = sol.condition_estimate
    return SolveResponse(
        input_edge=req.input_edge,
        amplitudes={e: _pair(a) for e, a in sorted(sol.amplitudes.items())},
        probabilities={e: abs(a) ** 2 for e, a in sorted(sol.amplitudes.items())},
        residual=sol.residual,
        condition_estimate=float(cond) if np.isfinite(cond) else None,
        iterations=sol.iterations,
        open_edges=list(system.open_edges),
    )


@app.post("/sweep", response_model=SweepResponse)
def sweep(req: SweepRequest) -> SweepResponse:
    try:
        spec = SweepSpec(
            network=req.network,
            grids=tuple(
                ParameterGrid(name, g.start, g.stop, g.count)
                for name, g in req.parameters.items()
            ),
            ports=tuple(req.ports),
            method=req.method,
            tol=req.tol,
            max_steps=req.max_steps,
            normalize=req.normalize,
        )
        records = run_sweep(spec, req.threads)
    except _VALIDATION as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from None
    return SweepResponse(records=records_as_json(records))


@app.post("/star", response_model=StarResponse)
def star_endpoint(req: StarRequest) -> StarResponse:
    try:
        scatterers = [
            TwoPortScatterer.from_matrix(
                np.array([[complex(*m[0][0]), complex(*m[0][1])],
                          [complex(*m[1][0]), complex(*m[1][1])]]),
                lossy=req.lossy,
            )
            for m in req.scatterers
        ]
        result = chain(scatterers)
    except _VALIDATION as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from None
    except _NUMERICAL as exc:
        raise HTTPException(status_code=409, detail=str(exc)) from None
    m = result.as_matrix()
    return StarResponse(matrix=[[_pair(v) for v in row] for row in m])


@app.post("/normalize", response_model=NormalizeResponse)
def normalize(req: NetworkRequest) -> NormalizeResponse:
    try:
        graph = normalize_loops(parse_network(req.network))
    except _VALIDATION as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from None
    return NormalizeResponse(
        network=serialize_network(graph), n=graph.n, d=graph.d
    )
