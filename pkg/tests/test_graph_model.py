import numpy as np
import pytest

from scatternet import (
    LocalScatterer,
    NetworkGraph,
    build_incidence,
    detect_simultaneity_hazard,
    normalize_loops,
    parse_network,
    serialize_network,
)
from scatternet.errors import NetworkFormatError, NetworkValidationError
from scatternet.graph_model import template_parameters

from conftest import (
    REDHEFFER_DOC,
    assert_graphs_identical,
    random_tree_network,
    random_unitary,
)


class TestParse:
    def test_redheffer_document(self):
        g = parse_network(REDHEFFER_DOC)
        assert g.n == 2 and g.d == 3
        assert g.q == 1
        assert g.node(1).local_to_global == (1, 3)
        assert g.node(2).local_to_global == (3, 2)
        assert build_incidence(g).open_edges == (1, 2)
        assert np.all(g.phase == 1.0)

    def test_single_mirror(self):
        g = parse_network("network 1 1\nnode 1 matrix -1 0 edges 1\n")
        assert g.n == 1 and g.d == 1 and g.q == 0
        assert build_incidence(g).open_ports == ((1, 1),)

    def test_edge_multiplicity_three_rejected(self):
        doc = (
            "network 3 3\n"
            "node 1 matrix 0 0 1 0 1 0 0 0 edges 1 3\n"
            "node 2 matrix 0 0 1 0 1 0 0 0 edges 2 3\n"
            "node 3 matrix -1 0 edges 3\n"
        )
        with pytest.raises(NetworkValidationError, match="multiplicity"):
            parse_network(doc)

    def test_syntax_error_carries_line_number(self):
        with pytest.raises(NetworkFormatError, match="line 2"):
            parse_network("network 1 1\nnode 1 matrix junk edges 1\n")

    def test_out_of_range_edge_id(self):
        with pytest.raises(NetworkValidationError, match="out of range"):
            parse_network("network 1 1\nnode 1 matrix -1 0 edges 5\n")

    def test_orphan_edge(self):
        with pytest.raises(NetworkValidationError, match="edge 2"):
            parse_network("network 1 2\nnode 1 matrix -1 0 edges 1\n")

    def test_non_unitary_needs_lossy_flag(self):
        doc = "network 1 1\nnode 1 matrix 0.5 0 edges 1\n"
        with pytest.raises(NetworkFormatError, match="lossy"):
            parse_network(doc)
        g = parse_network("network 1 1\nnode 1 lossy matrix 0.5 0 edges 1\n")
        assert g.node(1).lossy

    def test_phase_modulus_validated(self):
        doc = REDHEFFER_DOC + "phase 3 0.5 0.0\n"
        with pytest.raises(NetworkValidationError, match="unit modulus"):
            parse_network(doc)

    def test_device_records(self):
        g = parse_network(
            "network 1 4\nnode 1 device grover:4 edges 1 2 3 4\n"
        )
        assert np.allclose(g.node(1).matrix, 0.5 * np.ones((4, 4)) - np.eye(4))

    def test_unknown_device(self):
        with pytest.raises(NetworkFormatError, match="unknown device"):
            parse_network("network 1 1\nnode 1 device warp edges 1\n")

    def test_unbound_parameter(self):
        doc = "network 1 2\nnode 1 device phase:$phi edges 1 2\n"
        with pytest.raises(NetworkFormatError, match="unbound parameter"):
            parse_network(doc)
        g = parse_network(doc, params={"phi": np.pi})
        assert np.isclose(g.node(1).matrix[0, 1], np.exp(0.5j * np.pi))

    def test_template_parameters(self):
        doc = "network 2 3\nnode 1 device phase:$a edges 1 3\nnode 2 device phase:$b edges 3 2\n"
        assert template_parameters(doc) == {"a", "b"}


class TestRoundTrip:
    def test_redheffer_round_trip(self):
        g = parse_network(REDHEFFER_DOC)
        assert_graphs_identical(g, parse_network(serialize_network(g)))

    def test_random_graphs_round_trip(self, rng):
        for _ in range(20):
            g = random_tree_network(rng)
            assert_graphs_identical(g, parse_network(serialize_network(g)))

    def test_names_lossy_and_phases_survive(self):
        doc = (
            "network 2 3\n"
            "node 1 name=left lossy matrix 0.5 0 0 0 0 0 0.5 0 edges 1 3\n"
            "node 2 name=right matrix 0 0 1 0 1 0 0 0 edges 3 2\n"
            "phase 3 0.0 1.0\n"
        )
        g = parse_network(doc)
        assert g.node(1).name == "left" and g.node(1).lossy
        assert g.phase[2] == 1j
        assert_graphs_identical(g, parse_network(serialize_network(g)))


class TestIncidence:
    def test_redheffer_incidence(self):
        g = parse_network(REDHEFFER_DOC)
        inc = build_incidence(g)
        assert inc.attached == ((1,), (2,), (1, 2))
        assert inc.open_ports == ((1, 1), (2, 2))

    def test_open_port_count_matches_q(self, rng):
        for _ in range(20):
            g = random_tree_network(rng)
            inc = build_incidence(g)
            assert len(inc.open_ports) == g.d - g.q

    def test_incidence_mass_balance(self, rng):
        # Total edge attachments equal total local port count.
        for _ in range(20):
            g = random_tree_network(rng)
            inc = build_incidence(g)
            assert sum(len(a) for a in inc.attached) == sum(
                s.dim for s in g.scatterers
            )

    def test_round_trip_against_maps(self, rng):
        g = random_tree_network(rng)
        inc = build_incidence(g)
        for s in g.scatterers:
            for e in s.local_to_global:
                assert s.node_id in inc.attached[e - 1]


def _two_port(rng):
    return random_unitary(2, rng)


class TestHazards:
    def test_parallel_edges_flagged(self, rng):
        g = NetworkGraph(
            2,
            4,
            (
                LocalScatterer(1, random_unitary(3, rng), (1, 2, 3)),
                LocalScatterer(2, random_unitary(3, rng), (2, 3, 4)),
            ),
            np.ones(4, dtype=complex),
        )
        hazards = detect_simultaneity_hazard(g)
        assert [h.kind for h in hazards] == ["parallel"]
        assert hazards[0].nodes == (1, 2)
        assert hazards[0].edges == (2, 3)

    def test_linear_chain_is_safe(self, rng):
        g = NetworkGraph(
            3,
            4,
            (
                LocalScatterer(1, _two_port(rng), (1, 2)),
                LocalScatterer(2, _two_port(rng), (2, 3)),
                LocalScatterer(3, _two_port(rng), (3, 4)),
            ),
            np.ones(4, dtype=complex),
        )
        assert detect_simultaneity_hazard(g) == []

    def test_triangle_co_activates(self, rng):
        g = NetworkGraph(
            3,
            3,
            (
                LocalScatterer(1, _two_port(rng), (1, 3)),
                LocalScatterer(2, _two_port(rng), (1, 2)),
                LocalScatterer(3, _two_port(rng), (2, 3)),
            ),
            np.ones(3, dtype=complex),
        )
        hazards = detect_simultaneity_hazard(g)
        assert hazards and all(h.kind == "co_activation" for h in hazards)

    def test_self_loop_flagged(self, rng):
        g = NetworkGraph(
            1,
            2,
            (LocalScatterer(1, random_unitary(3, rng), (1, 2, 2)),),
            np.ones(2, dtype=complex),
        )
        hazards = detect_simultaneity_hazard(g)
        assert [h.kind for h in hazards] == ["self_loop"]

    def test_random_trees_are_safe(self, rng):
        for _ in range(20):
            assert detect_simultaneity_hazard(random_tree_network(rng)) == []


class TestNormalizeLoops:
    def test_redheffer_split(self):
        g = parse_network(REDHEFFER_DOC)
        gn = normalize_loops(g)
        assert gn.n == 3 and gn.d == 4
        assert detect_simultaneity_hazard(gn) == []
        # The inserted node is a pass-through on the old internal edge.
        passthrough = gn.node(3)
        assert np.array_equal(
            passthrough.matrix, np.array([[0, 1], [1, 0]], dtype=complex)
        )
        assert passthrough.local_to_global == (3, 4)

    def test_no_internal_edges_unchanged(self, rng):
        g = NetworkGraph(
            1,
            2,
            (LocalScatterer(1, _two_port(rng), (1, 2)),),
            np.ones(2, dtype=complex),
        )
        assert normalize_loops(g) is g

    def test_parallel_pair_normalizes_clean(self, rng):
        g = NetworkGraph(
            2,
            4,
            (
                LocalScatterer(1, random_unitary(3, rng), (1, 2, 3)),
                LocalScatterer(2, random_unitary(3, rng), (2, 3, 4)),
            ),
            np.ones(4, dtype=complex),
        )
        gn = normalize_loops(g)
        assert gn.n == 4 and gn.d == 6
        assert detect_simultaneity_hazard(gn) == []

    def test_self_loop_normalizes_clean(self, rng):
        g = NetworkGraph(
            1,
            2,
            (LocalScatterer(1, random_unitary(3, rng), (1, 2, 2)),),
            np.ones(2, dtype=complex),
        )
        gn = normalize_loops(g)
        assert detect_simultaneity_hazard(gn) == []

    def test_hazard_free_after_double_application(self, rng):
        g = parse_network(REDHEFFER_DOC)
        gn = normalize_loops(normalize_loops(g))
        assert detect_simultaneity_hazard(gn) == []

    def test_phase_stays_on_first_segment(self):
        doc = REDHEFFER_DOC + "phase 3 0.0 1.0\n"
        gn = normalize_loops(parse_network(doc))
        assert gn.phase[2] == 1j  # old edge 3 keeps its phase
        assert gn.phase[3] == 1.0  # new segment is phase-free


class TestLocalScatterer:
    def test_unitarity_enforced(self):
        with pytest.raises(NetworkValidationError, match="not unitary"):
            LocalScatterer(1, np.array([[0.5]]), (1,))

    def test_nan_rejected(self):
        with pytest.raises(NetworkValidationError, match="non-finite"):
            LocalScatterer(1, np.array([[np.nan]]), (1,), lossy=True)

    def test_edge_used_three_times_rejected(self):
        with pytest.raises(NetworkValidationError, match="more than twice"):
            LocalScatterer(1, np.eye(3, dtype=complex), (1, 1, 1))
