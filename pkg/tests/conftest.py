"""Shared fixtures: reference graphs and random network generation."""

from __future__ import annotations

import numpy as np
import pytest
from scipy.stats import unitary_group

from scatternet import LocalScatterer, NetworkGraph, TwoPortScatterer


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    if dim == 1:
        return np.array([[np.exp(2j * np.pi * rng.random())]])
    return unitary_group.rvs(dim, random_state=rng)


def random_two_port(rng: np.random.Generator) -> TwoPortScatterer:
    return TwoPortScatterer.from_matrix(random_unitary(2, rng))


def two_node_graph(
    s: TwoPortScatterer, s1: TwoPortScatterer, phase=None
) -> NetworkGraph:
    """The thin-film bilayer graph: open edges 1 and 2, shared edge 3."""
    if phase is None:
        phase = np.ones(3, dtype=complex)
    return NetworkGraph(
        2,
        3,
        (
            LocalScatterer(1, s.as_matrix(), (1, 3), lossy=s.lossy),
            LocalScatterer(2, s1.as_matrix(), (3, 2), lossy=s1.lossy),
        ),
        phase,
    )


def path_graph(scatterers: list[TwoPortScatterer]) -> NetworkGraph:
    """Chain of two-ports; open edges 1 (left) and len+1 (right)."""
    n = len(scatterers)
    nodes = tuple(
        LocalScatterer(i + 1, s.as_matrix(), (i + 1, i + 2), lossy=s.lossy)
        for i, s in enumerate(scatterers)
    )
    return NetworkGraph(n, n + 1, nodes, np.ones(n + 1, dtype=complex))


def single_mirror_graph() -> NetworkGraph:
    return NetworkGraph(
        1,
        1,
        (LocalScatterer(1, np.array([[-1.0]], dtype=complex), (1,)),),
        np.ones(1, dtype=complex),
    )


def random_tree_network(
    rng: np.random.Generator, max_nodes: int = 8, max_edges: int = 16
) -> NetworkGraph:
    """A random hazard-free network: a tree plus extra open ports.

    Trees activate in strict distance parity, so adjacent nodes never
    co-activate and no parallel edges or self-loops exist.
    """
    n = int(rng.integers(2, max_nodes + 1))
    parents = [int(rng.integers(0, i)) for i in range(1, n)]

    # Internal edges first, in tree order.
    edge = 0
    node_edges: list[list[int]] = [[] for _ in range(n)]
    for i, p in enumerate(parents, start=1):
        edge += 1
        node_edges[p].append(edge)
        node_edges[i].append(edge)

    # Open ports: the root always gets one, others at random within budget.
    order = [0] + [int(j) for j in rng.permutation(range(1, n))]
    for idx, i in enumerate(order):
        want = 1 if idx == 0 else int(rng.integers(0, 2))
        for _ in range(want):
            if edge >= max_edges:
                break
            edge += 1
            node_edges[i].append(edge)

    scatterers = tuple(
        LocalScatterer(
            i + 1, random_unitary(len(node_edges[i]), rng), tuple(node_edges[i])
        )
        for i in range(n)
    )
    phase = np.exp(2j * np.pi * rng.random(edge))
    phase /= np.abs(phase)
    return NetworkGraph(n, edge, scatterers, phase)


REDHEFFER_DOC = """\
# thin-film bilayer
network 2 3
node 1 name=S matrix 0.6 0.0 0.8 0.0 0.8 0.0 -0.6 0.0 edges 1 3
node 2 name=S1 matrix 0.28 0.0 0.96 0.0 0.96 0.0 -0.28 0.0 edges 3 2
"""

GM_TEMPLATE = """\
network 5 6
node 1 name=g device grover:4 edges 1 2 3 4
node 2 name=p1 device phase:$phi1 edges 3 5
node 3 name=p2 device phase:$phi2 edges 4 6
node 4 name=m1 device mirror edges 5
node 5 name=m2 device mirror edges 6
"""


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)


def assert_graphs_identical(a: NetworkGraph, b: NetworkGraph) -> None:
    assert a.n == b.n and a.d == b.d
    assert np.array_equal(a.phase, b.phase)
    for sa, sb in zip(a.scatterers, b.scatterers):
        assert sa.node_id == sb.node_id
        assert sa.local_to_global == sb.local_to_global
        assert sa.name == sb.name
        assert sa.lossy == sb.lossy
        assert np.array_equal(sa.matrix, sb.matrix)
