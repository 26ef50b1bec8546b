"""Network data model: scatterer graphs, parsing, incidence and loop handling.

A network is an undirected multigraph. Nodes are linear coherent scatterers,
each carrying a local unitary scattering matrix; edges are abstract
unit-delay modes identified by 1-based global ids. An edge attached to a
single node is an open port of the aggregate device; an edge attached twice
(to two nodes, or twice to the same node for a self-loop) is internal.

Text format (one record per line, ``#`` starts a comment)::

    network <n> <d>
    node <id> [name=<label>] [lossy] matrix <re> <im> ... edges <e1> ... <edj>
    node <id> [name=<label>] device <spec> edges <e1> ... <edj>
    phase <edge> <re> <im>

The matrix is given as ``dj*dj`` complex entries in row-major order, two
decimal literals each; ``dj`` is the number of edges listed. ``device``
records reference a named constructor instead (``mirror``, ``bs5050``,
``passthrough``, ``grover:<n>``, ``phase:<radians>``); constructor arguments
may be ``$name`` placeholders when a parameter binding is supplied.
Missing ``phase`` records default to 1 (identity propagation phase).
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

from .errors import NetworkFormatError, NetworkValidationError

UNITARITY_TOL = 1e-12
PHASE_TOL = 1e-12

PASS_THROUGH = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


def unitarity_defect(matrix: np.ndarray) -> float:
    """Max-norm of U†U - I."""
    m = np.asarray(matrix, dtype=complex)
    return float(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))))


@dataclass(frozen=True)
class LocalScatterer:
    """A node: its local scattering matrix and local-to-global edge map.

    ``local_to_global[k]`` is the global edge id attached to local port
    ``k + 1``.  A global edge id may appear twice in the map, which encodes a
    self-loop; such nodes cannot be assembled directly (see
    :func:`normalize_loops`).
    """

    node_id: int
    matrix: np.ndarray
    local_to_global: tuple[int, ...]
    name: str | None = None
    lossy: bool = False

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise NetworkValidationError(
                f"node {self.node_id}: matrix must be square, got {m.shape}"
            )
        if m.shape[0] != len(self.local_to_global):
            raise NetworkValidationError(
                f"node {self.node_id}: matrix is {m.shape[0]}x{m.shape[0]} but "
                f"{len(self.local_to_global)} edges are mapped"
            )
        if m.shape[0] < 1:
            raise NetworkValidationError(f"node {self.node_id}: empty matrix")
        if not np.all(np.isfinite(m.view(float))):
            raise NetworkValidationError(
                f"node {self.node_id}: matrix has non-finite entries"
            )
        for e in self.local_to_global:
            if self.local_to_global.count(e) > 2:
                raise NetworkValidationError(
                    f"node {self.node_id}: edge {e} used more than twice"
                )
        if not self.lossy:
            defect = unitarity_defect(m)
            if defect >= UNITARITY_TOL:
                raise NetworkValidationError(
                    f"node {self.node_id}: matrix is not unitary "
                    f"(defect {defect:.3e}); flag the node 'lossy' to allow this"
                )
        object.__setattr__(self, "matrix", _frozen(m))
        object.__setattr__(self, "local_to_global", tuple(self.local_to_global))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def self_loop_edges(self) -> tuple[int, ...]:
        """Edge ids appearing twice in this node's map."""
        seen, loops = set(), []
        for e in self.local_to_global:
            if e in seen and e not in loops:
                loops.append(e)
            seen.add(e)
        return tuple(loops)


@dataclass(frozen=True)
class NetworkGraph:
    """A full network: nodes, edge count and per-edge propagation phases."""

    n: int
    d: int
    scatterers: tuple[LocalScatterer, ...]
    phase: np.ndarray  # length d, unit modulus

    def __post_init__(self):
        object.__setattr__(self, "scatterers", tuple(self.scatterers))
        if self.n != len(self.scatterers):
            raise NetworkValidationError(
                f"declared {self.n} nodes but {len(self.scatterers)} given"
            )
        ids = sorted(s.node_id for s in self.scatterers)
        if ids != list(range(1, self.n + 1)):
            raise NetworkValidationError(
                f"node ids must be 1..{self.n}, got {ids}"
            )
        phase = np.asarray(self.phase, dtype=complex)
        if phase.shape != (self.d,):
            raise NetworkValidationError(
                f"phase vector must have length {self.d}, got {phase.shape}"
            )
        if np.max(np.abs(np.abs(phase) - 1.0), initial=0.0) >= PHASE_TOL:
            raise NetworkValidationError("phase entries must have unit modulus")
        counts = np.zeros(self.d + 1, dtype=int)
        for s in self.scatterers:
            for e in s.local_to_global:
                if not 1 <= e <= self.d:
                    raise NetworkValidationError(
                        f"node {s.node_id}: edge id {e} out of range 1..{self.d}"
                    )
                counts[e] += 1
        for e in range(1, self.d + 1):
            if counts[e] == 0:
                raise NetworkValidationError(f"edge {e} is attached to no node")
            if counts[e] > 2:
                raise NetworkValidationError(
                    f"edge {e} has multiplicity {counts[e]} > 2"
                )
        object.__setattr__(self, "phase", _frozen(phase))

    def node(self, node_id: int) -> LocalScatterer:
        return self.scatterers[node_id - 1]

    @property
    def q(self) -> int:
        """Number of internal edges."""
        counts = np.zeros(self.d + 1, dtype=int)
        for s in self.scatterers:
            for e in s.local_to_global:
                counts[e] += 1
        return int(np.sum(counts[1:] == 2))


@dataclass(frozen=True)
class EdgeIncidence:
    """Inverse of the local-to-global maps: which nodes touch each edge."""

    attached: tuple[tuple[int, ...], ...]  # per edge, node ids (len 1 or 2)
    open_ports: tuple[tuple[int, int], ...]  # (node_id, edge_id) pairs

    @property
    def open_edges(self) -> tuple[int, ...]:
        return tuple(sorted(e for _, e in self.open_ports))

    def internal_edges(self, d: int) -> tuple[int, ...]:
        open_set = {e for _, e in self.open_ports}
        return tuple(e for e in range(1, d + 1) if e not in open_set)

    def owner_of_open_edge(self, edge: int) -> int:
        for node, e in self.open_ports:
            if e == edge:
                return node
        raise NetworkValidationError(f"edge {edge} is not an open port")


@dataclass(frozen=True)
class Hazard:
    """A configuration that makes global product order ambiguous."""

    kind: str  # "parallel", "self_loop" or "co_activation"
    nodes: tuple[int, ...]
    edges: tuple[int, ...] = field(default=())

    def __str__(self) -> str:
        if self.kind == "self_loop":
            return f"self-loop at node {self.nodes[0]} (edge {self.edges[0]})"
        if self.kind == "parallel":
            return (
                f"parallel edges {list(self.edges)} between nodes "
                f"{self.nodes[0]} and {self.nodes[1]}"
            )
        return f"adjacent nodes {self.nodes[0]} and {self.nodes[1]} co-activate"


def build_incidence(graph: NetworkGraph) -> EdgeIncidence:
    """Invert the local-to-global maps into per-edge attachment lists."""
    attached: list[list[int]] = [[] for _ in range(graph.d)]
    for s in graph.scatterers:
        for e in s.local_to_global:
            attached[e - 1].append(s.node_id)
    open_ports = tuple(
        (nodes[0], e + 1) for e, nodes in enumerate(attached) if len(nodes) == 1
    )
    return EdgeIncidence(tuple(tuple(a) for a in attached), open_ports)


def internal_neighbors(
    graph: NetworkGraph, incidence: EdgeIncidence | None = None
) -> dict[int, set[int]]:
    """Adjacency over internal edges; a self-loop makes a node its own neighbor."""
    inc = incidence or build_incidence(graph)
    nbrs: dict[int, set[int]] = {s.node_id: set() for s in graph.scatterers}
    for nodes in inc.attached:
        if len(nodes) == 2:
            a, b = nodes
            nbrs[a].add(b)
            nbrs[b].add(a)
    return nbrs


def detect_simultaneity_hazard(
    graph: NetworkGraph, incidence: EdgeIncidence | None = None
) -> list[Hazard]:
    """Find all configurations that break unambiguous product ordering.

    Flags self-loops, parallel edge pairs and any pair of adjacent nodes that
    the activation dynamics can excite in the same time step (checked by
    running the activation rule from every node until the activation state
    repeats). An empty result means the graph is safe to assemble.
    """
    inc = incidence or build_incidence(graph)
    hazards: list[Hazard] = []

    for s in graph.scatterers:
        for e in s.self_loop_edges:
            hazards.append(Hazard("self_loop", (s.node_id,), (e,)))

    pair_edges: dict[tuple[int, int], list[int]] = {}
    for e, nodes in enumerate(inc.attached, start=1):
        if len(nodes) == 2 and nodes[0] != nodes[1]:
            key = tuple(sorted(nodes))
            pair_edges.setdefault(key, []).append(e)
    for (a, b), edges in sorted(pair_edges.items()):
        if len(edges) >= 2:
            hazards.append(Hazard("parallel", (a, b), tuple(edges)))

    nbrs = internal_neighbors(graph, inc)
    co_active: set[tuple[int, int]] = set()
    for start in sorted(nbrs):
        active = frozenset([start])
        seen = set()
        while active and active not in seen:
            seen.add(active)
            ordered = sorted(active)
            for i, a in enumerate(ordered):
                for b in ordered[i + 1 :]:
                    if b in nbrs[a]:
                        co_active.add((a, b))
            active = frozenset(
                k for j in active for k in nbrs[j]
            )
    existing = {tuple(sorted(h.nodes)) for h in hazards if len(h.nodes) == 2}
    for a, b in sorted(co_active):
        if (a, b) not in existing:
            hazards.append(Hazard("co_activation", (a, b)))
    return hazards


def normalize_loops(graph: NetworkGraph) -> NetworkGraph:
    """Split internal edges with identity pass-through nodes.

    Every internal edge gains one 2x2 pass-through node; a self-loop is split
    by a chain of three pass-through nodes, since one or two would leave a
    parallel pair or an odd cycle behind. The result is hazard-free and has
    the same steady-state scattering amplitudes (pass-through nodes only
    redefine the unit of propagation delay). The propagation phase of a split
    edge stays on its first segment; new segments carry phase 1.

    A graph with no internal edges is returned unchanged.
    """
    inc = build_incidence(graph)
    if graph.q == 0:
        return graph

    remap: dict[int, dict[int, int]] = {}  # node -> {occurrence idx -> new edge}
    new_nodes: list[tuple[np.ndarray, tuple[int, ...]]] = []
    new_phases: list[complex] = []
    next_edge = graph.d

    for e, nodes in enumerate(inc.attached, start=1):
        if len(nodes) != 2:
            continue
        a, b = nodes
        if a == b:
            # Self-loop: a -e- P1 - P2 - P3 - a.
            m1, m2, m3 = next_edge + 1, next_edge + 2, next_edge + 3
            next_edge += 3
            new_nodes.append((PASS_THROUGH, (e, m1)))
            new_nodes.append((PASS_THROUGH, (m1, m2)))
            new_nodes.append((PASS_THROUGH, (m2, m3)))
            new_phases.extend([1.0, 1.0, 1.0])
            # Second occurrence of e in node a moves to m3.
            remap.setdefault(a, {})[_nth_occurrence(graph.node(a), e, 2)] = m3
        else:
            # a keeps e, pass-through bridges to b on a fresh edge.
            m = next_edge + 1
            next_edge += 1
            new_nodes.append((PASS_THROUGH, (e, m)))
            new_phases.append(1.0)
            remap.setdefault(b, {})[_nth_occurrence(graph.node(b), e, 1)] = m

    scatterers = []
    for s in graph.scatterers:
        moves = remap.get(s.node_id)
        if moves:
            v = list(s.local_to_global)
            for k, new_e in moves.items():
                v[k] = new_e
            s = LocalScatterer(s.node_id, s.matrix, tuple(v), s.name, s.lossy)
        scatterers.append(s)
    for i, (m, edges) in enumerate(new_nodes):
        scatterers.append(LocalScatterer(graph.n + 1 + i, m, edges))

    phase = np.concatenate([graph.phase, np.asarray(new_phases, dtype=complex)])
    return NetworkGraph(graph.n + len(new_nodes), next_edge, tuple(scatterers), phase)


def _nth_occurrence(node: LocalScatterer, edge: int, nth: int) -> int:
    count = 0
    for k, e in enumerate(node.local_to_global):
        if e == edge:
            count += 1
            if count == nth:
                return k
    raise NetworkValidationError(
        f"node {node.node_id}: edge {edge} occurrence {nth} not found"
    )


# ---------------------------------------------------------------------------
# Parsing and serialization


def parse_network(
    text: str, params: Mapping[str, float] | None = None
) -> NetworkGraph:
    """Parse a network description document.

    ``params`` binds ``$name`` placeholders inside device-constructor
    arguments; an unbound placeholder is a format error.
    """
    from . import devices  # local import: devices builds graphs too

    n = d = None
    scatterers: list[LocalScatterer] = []
    phase_entries: dict[int, complex] = {}
    header_line = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        kind = tokens[0]
        if kind == "network":
            if n is not None:
                raise NetworkFormatError("duplicate 'network' header", lineno)
            if len(tokens) != 3:
                raise NetworkFormatError("expected 'network <n> <d>'", lineno)
            n, d = _parse_int(tokens[1], lineno), _parse_int(tokens[2], lineno)
            header_line = lineno
        elif kind == "node":
            if n is None:
                raise NetworkFormatError("'node' before 'network' header", lineno)
            scatterers.append(_parse_node(tokens, lineno, params, devices))
        elif kind == "phase":
            if n is None:
                raise NetworkFormatError("'phase' before 'network' header", lineno)
            if len(tokens) != 4:
                raise NetworkFormatError("expected 'phase <edge> <re> <im>'", lineno)
            e = _parse_int(tokens[1], lineno)
            phase_entries[e] = complex(
                _parse_float(tokens[2], lineno), _parse_float(tokens[3], lineno)
            )
        else:
            raise NetworkFormatError(f"unknown record '{kind}'", lineno)

    if n is None or d is None:
        raise NetworkFormatError("missing 'network <n> <d>' header", header_line)
    phase = np.ones(d, dtype=complex)
    for e, value in phase_entries.items():
        if not 1 <= e <= d:
            raise NetworkValidationError(f"phase record for edge {e} out of range")
        phase[e - 1] = value
    try:
        return NetworkGraph(n, d, tuple(scatterers), phase)
    except NetworkValidationError:
        raise


def _parse_node(tokens, lineno, params, devices) -> LocalScatterer:
    node_id = _parse_int(tokens[1], lineno)
    i = 2
    name = None
    lossy = False
    while i < len(tokens) and tokens[i] not in ("matrix", "device"):
        if tokens[i].startswith("name="):
            name = tokens[i][5:]
        elif tokens[i] == "lossy":
            lossy = True
        else:
            raise NetworkFormatError(
                f"unexpected token '{tokens[i]}' in node record", lineno
            )
        i += 1
    if i >= len(tokens):
        raise NetworkFormatError("node record missing 'matrix' or 'device'", lineno)

    if tokens[i] == "device":
        if i + 1 >= len(tokens):
            raise NetworkFormatError("missing device spec", lineno)
        spec = tokens[i + 1]
        try:
            matrix = devices.device_matrix(spec, params)
        except KeyError as exc:
            raise NetworkFormatError(str(exc.args[0]), lineno) from None
        i += 2
    else:
        i += 1
        values = []
        while i < len(tokens) and tokens[i] != "edges":
            values.append(_parse_float(tokens[i], lineno))
            i += 1
        if len(values) % 2:
            raise NetworkFormatError("matrix entries must be (re, im) pairs", lineno)
        flat = np.array(values[0::2], dtype=float) + 1j * np.array(values[1::2])
        dim = int(round(np.sqrt(flat.size)))
        if dim * dim != flat.size:
            raise NetworkFormatError(
                f"matrix entry count {flat.size} is not a perfect square", lineno
            )
        matrix = flat.reshape(dim, dim)

    if i >= len(tokens) or tokens[i] != "edges":
        raise NetworkFormatError("node record missing 'edges' list", lineno)
    edges = tuple(_parse_int(t, lineno) for t in tokens[i + 1 :])
    if not edges:
        raise NetworkFormatError("empty 'edges' list", lineno)
    try:
        return LocalScatterer(node_id, matrix, edges, name, lossy)
    except NetworkValidationError as exc:
        raise NetworkFormatError(str(exc), lineno) from None


def _parse_int(token: str, lineno: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise NetworkFormatError(f"expected integer, got '{token}'", lineno) from None


def _parse_float(token: str, lineno: int) -> float:
    try:
        return float(token)
    except ValueError:
        raise NetworkFormatError(f"expected number, got '{token}'", lineno) from None


def template_parameters(text: str) -> set[str]:
    """Names of all ``$name`` placeholders in a network document."""
    names = set()
    for raw in text.splitlines():
        line = raw.split("#", 1)[0]
        for token in line.split():
            for part in token.split(":"):
                if part.startswith("$"):
                    names.add(part[1:])
    return names


def serialize_network(graph: NetworkGraph) -> str:
    """Emit the canonical textual form; round-trips bit-exactly."""
    lines = [f"network {graph.n} {graph.d}"]
    for s in graph.scatterers:
        parts = [f"node {s.node_id}"]
        if s.name:
            parts.append(f"name={s.name}")
        if s.lossy:
            parts.append("lossy")
        parts.append("matrix")
        for value in s.matrix.ravel():
            parts.append(repr(float(value.real)))
            parts.append(repr(float(value.imag)))
        parts.append("edges")
        parts.extend(str(e) for e in s.local_to_global)
        lines.append(" ".join(parts))
    for e in range(1, graph.d + 1):
        value = complex(graph.phase[e - 1])
        if value != 1.0 + 0.0j:
            lines.append(f"phase {e} {value.real!r} {value.imag!r}")
    return "\n".join(lines) + "\n"
