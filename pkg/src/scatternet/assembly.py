"""Global embedding and assembly of the network time-evolution operators.

Each local scattering matrix is embedded in a d x d identity, open-port
columns are replaced with standard basis vectors (so exiting light never
re-enters), and the node-activation sequence dictates the chronological
matrix products that form the transient injection operator ``A0`` and the
repeating two-step evolution operator ``A`` of the non-unitary walk
``X_{T+1} = A X_T``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DisconnectedGraphError, HazardError, NetworkValidationError
from .graph_model import (
    EdgeIncidence,
    NetworkGraph,
    build_incidence,
    detect_simultaneity_hazard,
    internal_neighbors,
)


@dataclass(frozen=True)
class GlobalScatteringMatrix:
    """A node's local matrix embedded at its global edge indices."""

    node_id: int
    matrix: np.ndarray  # d x d
    boundary_adjusted: bool


@dataclass(frozen=True)
class ActivationSequence:
    """Binary node-activation vectors w_0 .. w_{T0+1}.

    ``transient_horizon`` (T0) is the first step at which every node has been
    activated; from there on the activation pattern repeats with period 2.
    """

    steps: tuple[tuple[int, ...], ...]
    transient_horizon: int
    input_node: int

    def active_nodes(self, t: int) -> tuple[int, ...]:
        return tuple(j + 1 for j, bit in enumerate(self.steps[t]) if bit)


@dataclass(frozen=True)
class AssembledSystem:
    """The discrete-time system X_{T+1} = A X_T with X_0 = A0 e_input."""

    A: np.ndarray
    A0: np.ndarray
    X0: np.ndarray
    open_edges: tuple[int, ...]
    internal_edges: tuple[int, ...]
    input_edge: int


def embed_local(graph: NetworkGraph, node_id: int) -> GlobalScatteringMatrix:
    """Place a node's local matrix into a d x d identity at its global edges."""
    node = graph.node(node_id)
    if node.self_loop_edges:
        raise NetworkValidationError(
            f"node {node_id} has a self-loop on edge(s) "
            f"{list(node.self_loop_edges)}; apply normalize_loops first"
        )
    a = np.eye(graph.d, dtype=complex)
    idx = np.array(node.local_to_global) - 1
    a[np.ix_(idx, idx)] = node.matrix
    return GlobalScatteringMatrix(node_id, a, boundary_adjusted=False)


def apply_open_boundary(
    gsm: GlobalScatteringMatrix, graph: NetworkGraph, open_cols: list[int]
) -> GlobalScatteringMatrix:
    """Replace each listed open-port column with its standard basis vector."""
    owned = set(graph.node(gsm.node_id).local_to_global)
    a = gsm.matrix.copy()
    for e in open_cols:
        if e not in owned:
            raise NetworkValidationError(
                f"edge {e} is not attached to node {gsm.node_id}"
            )
        a[:, e - 1] = 0.0
        a[e - 1, e - 1] = 1.0
    return GlobalScatteringMatrix(gsm.node_id, a, boundary_adjusted=True)


def propagate_activations(
    graph: NetworkGraph,
    input_node: int,
    incidence: EdgeIncidence | None = None,
) -> ActivationSequence:
    """Run the neighbor-activation rule from the input node.

    Returns w_0 .. w_{T0+1} where T0 is the minimal step by which every node
    has been activated at least once.
    """
    nbrs = internal_neighbors(graph, incidence)
    reachable = {input_node}
    frontier = {input_node}
    while frontier:
        frontier = {k for j in frontier for k in nbrs[j]} - reachable
        reachable |= frontier
    if len(reachable) < graph.n:
        raise DisconnectedGraphError(set(nbrs) - reachable)

    def as_bits(active: set[int]) -> tuple[int, ...]:
        return tuple(1 if j in active else 0 for j in range(1, graph.n + 1))

    steps = []
    active = {input_node}
    visited = {input_node}
    steps.append(as_bits(active))
    t0 = 0
    while len(visited) < graph.n:
        active = {k for j in active for k in nbrs[j]}
        visited |= active
        steps.append(as_bits(active))
        t0 += 1
    # One step beyond the transient horizon closes the period-2 repeat pair.
    active = {k for j in active for k in nbrs[j]}
    steps.append(as_bits(active))
    return ActivationSequence(tuple(steps), t0, input_node)


def assemble(
    graph: NetworkGraph,
    input_edge: int,
    incidence: EdgeIncidence | None = None,
    activations: ActivationSequence | None = None,
) -> AssembledSystem:
    """Build the system operators for a photon injected at an open port.

    ``A0`` chains the transient steps (the step-0 factor uses the input
    node's unmodified embedding, since that map carries the photon from
    outside to inside); ``A`` chains the two repeat steps of the
    boundary-adjusted embeddings. The per-edge propagation phases are
    left-multiplied after each time step's node products, restricted to
    internal edges (open-port propagation phase is an unobservable overall
    phase on the exiting light).

    Precomputed ``incidence``/``activations`` may be supplied to reuse the
    topology work across parameter sweeps.
    """
    inc = incidence or build_incidence(graph)
    hazards = detect_simultaneity_hazard(graph, inc)
    if hazards:
        raise HazardError(hazards)
    input_node = inc.owner_of_open_edge(input_edge)
    act = activations or propagate_activations(graph, input_node, inc)
    if act.input_node != input_node:
        raise NetworkValidationError(
            f"activation sequence starts at node {act.input_node}, "
            f"but edge {input_edge} belongs to node {input_node}"
        )

    open_edges = inc.open_edges
    internal = inc.internal_edges(graph.d)
    open_by_node: dict[int, list[int]] = {}
    for node, e in inc.open_ports:
        open_by_node.setdefault(node, []).append(e)

    unmodified = {j: embed_local(graph, j) for j in range(1, graph.n + 1)}
    adjusted = {
        j: apply_open_boundary(g, graph, open_by_node.get(j, []))
        for j, g in unmodified.items()
    }

    phi = np.ones(graph.d, dtype=complex)
    for e in internal:
        phi[e - 1] = graph.phase[e - 1]

    def step_product(acc: np.ndarray, t: int) -> np.ndarray:
        for j in act.active_nodes(t):
            acc = adjusted[j].matrix @ acc
        return phi[:, None] * acc

    t0 = act.transient_horizon
    a0 = unmodified[input_node].matrix.copy()
    if t0 == 0:
        # Single-node graph: light exits in one scattering event.
        a = np.eye(graph.d, dtype=complex)
    else:
        a0 = phi[:, None] * a0
        for t in range(1, t0):
            a0 = step_product(a0, t)
        a = np.eye(graph.d, dtype=complex)
        for t in (t0, t0 + 1):
            a = step_product(a, t)

    x0 = a0[:, input_edge - 1].copy()
    return AssembledSystem(a, a0, x0, open_edges, internal, input_edge)
