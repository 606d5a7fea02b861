import json

import pytest

from localsearch.algorithms import build_circuit, efficient_sequence, grover_sequence, partial_sequence
from localsearch.circuit import Circuit, Gate, cnot_count, depth, lower
from localsearch.transpile import (
    CouplingMap,
    Layout,
    RoutingError,
    builtin,
    degree_layout,
    full,
    grid,
    ibmq_casablanca,
    line,
    make_layout,
    mapped_metrics,
    ring,
    route,
    verify_equivalence,
)

TARGETS = {4: "1100", 6: "111100"}


def corpus(n):
    m = n // 2
    return {
        "grover": build_circuit(n, grover_sequence(n, 3), [TARGETS[n]]),
        "partial": build_circuit(n, partial_sequence(n, n - 2, "paper-4q"), [TARGETS[n]]),
        "efficient": build_circuit(n, efficient_sequence(n, m, tail="extra-first-local"), [TARGETS[n]]),
    }


def cnots_on_edges(circuit, coupling):
    return all(coupling.connected(*g.operands) for g in circuit.gates if len(g.operands) == 2)


class TestCouplingMap:
    def test_casablanca_shape(self):
        cm = ibmq_casablanca()
        assert cm.qubits == 7 and len(cm.edges) == 6
        assert cm.degree(1) == 3 and cm.degree(5) == 3

    def test_distances(self):
        cm = line(4)
        assert cm.distances()[0, 3] == 3
        assert cm.shortest_path(0, 3) == [0, 1, 2, 3]

    @pytest.mark.parametrize(
        "qubits,edges",
        [(3, [(0, 0)]), (3, [(0, 5)]), (4, [(0, 1), (2, 3)])],
    )
    def test_invalid(self, qubits, edges):
        with pytest.raises(RoutingError):
            CouplingMap(qubits, frozenset(edges))

    def test_json_roundtrip(self):
        cm = grid(2, 3)
        again = CouplingMap.from_json(cm.to_json())
        assert again == cm
        doc = json.loads(cm.to_json())
        assert doc["qubits"] == 6 and [0, 1] in doc["edges"]

    @pytest.mark.parametrize(
        "name,qubits,edges",
        [("casablanca", 7, 6), ("line:5", 5, 4), ("ring:5", 5, 5), ("full:4", 4, 6), ("grid:2x3", 6, 7)],
    )
    def test_builtin(self, name, qubits, edges):
        cm = builtin(name)
        assert (cm.qubits, len(cm.edges)) == (qubits, edges)

    @pytest.mark.parametrize("name", ["torus:3", "line:x", "grid:3"])
    def test_builtin_errors(self, name):
        with pytest.raises(RoutingError):
            builtin(name)


class TestLayout:
    def test_injective(self):
        with pytest.raises(RoutingError):
            Layout((0, 0))

    def test_degree_layout_is_connected_region(self):
        circ = lower(corpus(4)["grover"])
        lay = degree_layout(circ, ibmq_casablanca())
        assert len(set(lay.physical)) == circ.total_width
        assert 1 in lay.physical or 5 in lay.physical

    def test_unknown_strategy(self):
        with pytest.raises(RoutingError):
            make_layout("random", Circuit(2), line(2))


class TestRoute:
    def test_full_map_inserts_nothing(self):
        circ = lower(corpus(4)["grover"])
        res = route(circ, full(circ.total_width))
        assert res.swaps == 0
        assert res.circuit.gates == circ.gates
        assert mapped_metrics(res.circuit) == (cnot_count(circ), depth(circ))

    def test_one_swap_on_a_line(self):
        circ = Circuit(3, (Gate("CNOT", (0, 2)),))
        res = route(circ, line(3))
        assert res.swaps == 1
        assert mapped_metrics(res.circuit)[0] == cnot_count(circ) + 3
        assert verify_equivalence(circ, res.circuit, res.final_layout)

    def test_identity_verifies(self):
        circ = lower(corpus(4)["efficient"])
        assert verify_equivalence(circ, circ, Layout.trivial(circ.total_width))

    def test_dropped_swap_detected(self):
        circ = lower(corpus(4)["grover"])
        res = route(circ, line(circ.total_width))
        assert res.swaps > 0
        i = next(i for i, g in enumerate(res.circuit.gates) if g.kind == "SWAP")
        broken = Circuit(res.circuit.width, res.circuit.gates[:i] + res.circuit.gates[i + 1:])
        assert not verify_equivalence(circ, broken, res.final_layout)

    def test_each_swap_costs_three_cnots(self):
        circ = lower(corpus(4)["partial"])
        res = route(circ, ring(circ.total_width))
        assert mapped_metrics(res.circuit)[0] == cnot_count(circ) + 3 * res.swaps

    def test_needs_lowered_input(self):
        with pytest.raises(RoutingError):
            route(corpus(4)["grover"], full(5))

    def test_needs_enough_qubits(self):
        with pytest.raises(RoutingError):
            route(lower(corpus(4)["grover"]), line(3))

    def test_deterministic(self):
        circ = lower(corpus(4)["efficient"])
        assert route(circ, ibmq_casablanca()) == route(circ, ibmq_casablanca())

    def test_unpacks_to_circuit_and_layout(self):
        circ, final = route(Circuit(2, (Gate("CNOT", (0, 1)),)), line(2))
        assert isinstance(circ, Circuit) and final == Layout((0, 1))

    @pytest.mark.parametrize("n", [4, 6])
    @pytest.mark.parametrize("topology", ["casablanca", "line:7", "ring:7"])
    @pytest.mark.parametrize("layout", ["trivial", "degree"])
    def test_corpus_is_sound(self, n, topology, layout):
        cm = builtin(topology)
        for circ in corpus(n).values():
            low = lower(circ)
            lay = make_layout(layout, low, cm)
            res = route(low, cm, lay)
            assert cnots_on_edges(lower(res.circuit), cm)
            assert verify_equivalence(low, res.circuit, res.final_layout, lay, trials=5)
            c2, d2 = mapped_metrics(res.circuit)
            assert c2 >= cnot_count(low) and d2 >= depth(low)

    def test_casablanca_inflates_grover(self):
        low = lower(corpus(4)["grover"])
        c2, d2 = mapped_metrics(route(low, ibmq_casablanca()).circuit)
        assert c2 > cnot_count(low) and d2 > depth(low)

    def test_casablanca_ordering(self):
        mapped = {k: mapped_metrics(route(lower(c), ibmq_casablanca()).circuit)[0] for k, c in corpus(4).items()}
        assert mapped["efficient"] < mapped["partial"] < mapped["grover"]
