"""SWAP-insertion routing onto a coupling map, with equivalence checking."""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .circuit import DEFAULT_COST_MODEL, Circuit, CostModel, Gate, cnot_count, depth, lower
from .simulator import SimulationError, StateVector, _apply_gate

LOOKAHEAD = 5
MAX_VERIFY_WIDTH = 12


class RoutingError(ValueError):
    pass


@dataclass(frozen=True)
class CouplingMap:
    qubits: int
    edges: frozenset[tuple[int, int]]

    def __post_init__(self):
        norm = set()
        for a, b in self.edges:
            a, b = int(a), int(b)
            if a == b:
                raise RoutingError(f"self-loop on qubit {a}")
            if not (0 <= a < self.qubits and 0 <= b < self.qubits):
                raise RoutingError(f"edge ({a}, {b}) outside {self.qubits} qubits")
            norm.add((min(a, b), max(a, b)))
        object.__setattr__(self, "edges", frozenset(norm))
        if self.qubits > 1 and len(self._component(0)) != self.qubits:
            raise RoutingError("coupling map is disconnected")

    def neighbors(self, q: int) -> list[int]:
        return sorted({b for a, b in self.edges if a == q} | {a for a, b in self.edges if b == q})

    def degree(self, q: int) -> int:
        return len(self.neighbors(q))

    def connected(self, a: int, b: int) -> bool:
        return (min(a, b), max(a, b)) in self.edges

    def _component(self, start: int) -> set[int]:
        seen = {start}
        todo = [start]
        while todo:
            q = todo.pop()
            for r in self.neighbors(q):
                if r not in seen:
                    seen.add(r)
                    todo.append(r)
        return seen

    def distances(self) -> np.ndarray:
        dist = np.full((self.qubits, self.qubits), np.inf)
        for s in range(self.qubits):
            dist[s, s] = 0
            queue = deque([s])
            while queue:
                q = queue.popleft()
                for r in self.neighbors(q):
                    if dist[s, r] == np.inf:
                        dist[s, r] = dist[s, q] + 1
                        queue.append(r)
        return dist

    def shortest_path(self, a: int, b: int) -> list[int]:
        prev = {a: None}
        queue = deque([a])
        while queue:
            q = queue.popleft()
            if q == b:
                break
            for r in self.neighbors(q):
                if r not in prev:
                    prev[r] = q
                    queue.append(r)
        path = [b]
        while prev[path[-1]] is not None:
            path.append(prev[path[-1]])
        return path[::-1]

    def to_dict(self) -> dict:
        return {"qubits": self.qubits, "edges": [list(e) for e in sorted(self.edges)]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "CouplingMap":
        try:
            return cls(int(d["qubits"]), frozenset(tuple(e) for e in d["edges"]))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, RoutingError):
                raise
            raise RoutingError(f"malformed coupling map: {exc}") from exc

    @classmethod
    def from_json(cls, text: str) -> "CouplingMap":
        return cls.from_dict(json.loads(text))


def line(k: int) -> CouplingMap:
    return CouplingMap(k, frozenset((i, i + 1) for i in range(k - 1)))


def ring(k: int) -> CouplingMap:
    return CouplingMap(k, frozenset((i, (i + 1) % k) for i in range(k)))


def grid(rows: int, cols: int) -> CouplingMap:
    edges = set()
    for r in range(rows):
        for c in range(cols):
            q = r * cols + c
            if c + 1 < cols:
                edges.add((q, q + 1))
            if r + 1 < rows:
                edges.add((q, q + cols))
    return CouplingMap(rows * cols, frozenset(edges))


def full(k: int) -> CouplingMap:
    return CouplingMap(k, frozenset((i, j) for i in range(k) for j in range(i + 1, k)))


def ibmq_casablanca() -> CouplingMap:
    """7-qubit heavy-hex fragment shaped like an H."""
    return CouplingMap(7, frozenset({(0, 1), (1, 2), (1, 3), (3, 5), (4, 5), (5, 6)}))


def builtin(name: str) -> CouplingMap:
    """Parse ``casablanca``, ``line:K``, ``ring:K``, ``full:K`` or ``grid:RxC``."""
    if name in ("casablanca", "ibmq_casablanca"):
        return ibmq_casablanca()
    kind, _, arg = name.partition(":")
    try:
        if kind == "line":
            return line(int(arg))
        if kind == "ring":
            return ring(int(arg))
        if kind == "full":
            return full(int(arg))
        if kind == "grid":
            r, c = arg.lower().split("x")
            return grid(int(r), int(c))
    except ValueError as exc:
        raise RoutingError(f"bad topology spec {name!r}") from exc
    raise RoutingError(f"unknown topology {name!r}")


# ---------------------------------------------------------------------------
# layouts

@dataclass(frozen=True)
class Layout:
    """``physical[i]`` is the physical qubit holding logical qubit ``i``."""

    physical: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "physical", tuple(int(p) for p in self.physical))
        if len(set(self.physical)) != len(self.physical):
            raise RoutingError("layout is not injective")
        if any(p < 0 for p in self.physical):
            raise RoutingError("negative physical qubit")

    def check(self, coupling: CouplingMap) -> None:
        if any(p >= coupling.qubits for p in self.physical):
            raise RoutingError("layout exceeds the coupling map")

    def __getitem__(self, logical: int) -> int:
        return self.physical[logical]

    def __len__(self) -> int:
        return len(self.physical)

    @classmethod
    def trivial(cls, n: int) -> "Layout":
        return cls(tuple(range(n)))


def _interaction_counts(circuit: Circuit) -> np.ndarray:
    counts = np.zeros(circuit.total_width)
    for g in circuit.gates:
        if len(g.operands) >= 2:
            for q in g.operands:
                counts[q] += 1
    return counts


def degree_layout(circuit: Circuit, coupling: CouplingMap) -> Layout:
    """Busiest logical qubits onto a connected region grown from the best-connected qubit."""
    width = circuit.total_width
    start = max(range(coupling.qubits), key=lambda q: (coupling.degree(q), -q))
    region = [start]
    while len(region) < width:
        frontier = {r for q in region for r in coupling.neighbors(q)} - set(region)
        nxt = max(frontier, key=lambda q: (sum(coupling.connected(q, r) for r in region), coupling.degree(q), -q))
        region.append(nxt)
    counts = _interaction_counts(circuit)
    order = sorted(range(width), key=lambda q: (-counts[q], q))
    phys = [0] * width
    for logical, physical in zip(order, region):
        phys[logical] = physical
    return Layout(tuple(phys))


def make_layout(strategy: str, circuit: Circuit, coupling: CouplingMap) -> Layout:
    if strategy == "trivial":
        return Layout.trivial(circuit.total_width)
    if strategy == "degree":
        return degree_layout(circuit, coupling)
    raise RoutingError(f"unknown layout strategy {strategy!r}")


# ---------------------------------------------------------------------------
# routing

@dataclass(frozen=True)
class RoutingResult:
    circuit: Circuit
    initial_layout: Layout
    final_layout: Layout
    swaps: int

    def __iter__(self):
        yield self.circuit
        yield self.final_layout


def route(
    circuit: Circuit,
    coupling: CouplingMap,
    initial_layout: Layout | None = None,
    lookahead: int = LOOKAHEAD,
) -> RoutingResult:
    """Greedy SWAP insertion along shortest paths.

    For a two-qubit gate on non-adjacent physical qubits, SWAPs walk one end
    toward the other; at each hop the end to move is chosen by the summed
    distance of the next ``lookahead`` two-qubit gates.
    """
    if circuit.total_width > coupling.qubits:
        raise RoutingError(f"circuit needs {circuit.total_width} qubits, map has {coupling.qubits}")
    if not circuit.is_lowered():
        raise RoutingError("route expects a lowered circuit (1-qubit gates and CNOT)")
    layout = Layout.trivial(circuit.total_width) if initial_layout is None else initial_layout
    if len(layout) != circuit.total_width:
        raise RoutingError("layout size does not match circuit width")
    layout.check(coupling)
    dist = coupling.distances()
    l2p = list(layout.physical)
    gates = circuit.gates
    two_q = [i for i, g in enumerate(gates) if len(g.operands) == 2]
    out: list[Gate] = []
    swaps = 0
    nxt = 0
    for i, g in enumerate(gates):
        if len(g.operands) == 1:
            out.append(Gate(g.kind, (l2p[g.operands[0]],), angle=g.angle))
            continue
        while nxt < len(two_q) and two_q[nxt] <= i:
            nxt += 1
        window = [gates[j].operands for j in two_q[nxt: nxt + lookahead]]
        a, b = g.operands
        while dist[l2p[a], l2p[b]] > 1:
            best = None
            for mover, other in ((a, b), (b, a)):
                path = coupling.shortest_path(l2p[mover], l2p[other])
                hop = path[1]
                trial = list(l2p)
                for lq, pq in enumerate(trial):
                    if pq == hop:
                        trial[lq] = l2p[mover]
                trial[mover] = hop
                score = (dist[trial[a], trial[b]], sum(dist[trial[x], trial[y]] for x, y in window), mover != a)
                if best is None or score < best[0]:
                    best = (score, l2p[mover], hop, trial)
            _, p_from, p_to, trial = best
            out.append(Gate("SWAP", (p_from, p_to)))
            swaps += 1
            l2p = trial
        out.append(Gate(g.kind, (l2p[a], l2p[b])))
    routed = Circuit(coupling.qubits, tuple(out))
    return RoutingResult(routed, layout, Layout(tuple(l2p)), swaps)


def _place(logical: np.ndarray, n_logical: int, layout: Layout, n_physical: int) -> np.ndarray:
    """Embed a logical state into physical qubits; unused physical qubits in |0>."""
    extra = n_physical - n_logical
    t = logical.reshape((2,) * n_logical)
    zero = np.zeros((2,) * extra) if extra else np.array(1.0)
    if extra:
        zero[(0,) * extra] = 1
    full_t = np.tensordot(t, zero, axes=0)  # axes: logical 0..L-1, then spare
    spare = [p for p in range(n_physical) if p not in layout.physical]
    src_for_phys = {p: i for i, p in enumerate(layout.physical)}
    for j, p in enumerate(spare):
        src_for_phys[p] = n_logical + j
    perm = [src_for_phys[p] for p in range(n_physical)]
    return np.transpose(full_t, perm).reshape(-1)


def _run_raw(circuit: Circuit, amps: np.ndarray) -> np.ndarray:
    total = circuit.total_width
    psi = amps.astype(complex).reshape((1,) + (2,) * total).copy()
    for g in circuit.gates:
        _apply_gate(psi, g)
    return psi.reshape(-1)


def verify_equivalence(
    original: Circuit,
    routed: Circuit,
    final_layout: Layout,
    initial_layout: Layout | None = None,
    trials: int = 20,
    seed: int = 0,
    atol: float = 1e-9,
) -> bool:
    """Compare outputs on random inputs after undoing the routing permutation."""
    n_log = original.total_width
    n_phys = routed.total_width
    if n_phys > MAX_VERIFY_WIDTH:
        raise SimulationError(f"verification limited to {MAX_VERIFY_WIDTH} qubits, routed circuit has {n_phys}")
    initial_layout = Layout.trivial(n_log) if initial_layout is None else initial_layout
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        psi = StateVector.random(n_log, rng).amplitudes
        expect = _place(_run_raw(original, psi), n_log, final_layout, n_phys)
        got = _run_raw(routed, _place(psi, n_log, initial_layout, n_phys))
        if not np.allclose(got, expect, atol=atol):
            return False
    return True


def mapped_metrics(routed: Circuit, cost_model: CostModel = DEFAULT_COST_MODEL) -> tuple[int, int]:
    """(#CNOT', Depth') of a routed circuit, SWAPs counted as three CNOTs."""
    low = lower(routed, cost_model)
    return cnot_count(low, cost_model), depth(low, cost_model)
