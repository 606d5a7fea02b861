"""Gate-level circuit IR, oracle/diffusion builders, lowering and cost metrics.

Qubit 0 is the most significant bit of a basis-state index, so the bitstring
``"1100"`` names index 12 and its first character belongs to qubit 0.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

ONE_QUBIT = frozenset({"H", "X", "Z", "P"})
TWO_QUBIT = frozenset({"CNOT", "CZ", "SWAP"})
MULTI = frozenset({"MCX", "MCZ"})
KINDS = ONE_QUBIT | TWO_QUBIT | MULTI | {"PhaseOracle"}
LOWERED = frozenset({"H", "X", "Z", "P", "CNOT"})

MCX_SCHEMES = ("borrowed-ancilla-linear", "v-chain", "no-ancilla-recursive")


class CircuitError(ValueError):
    """Malformed gate, circuit or builder arguments."""


class InsufficientAncillas(CircuitError):
    """The chosen MCX scheme needs more ancilla qubits than the circuit has."""


def parse_bits(bits: str, n: int) -> int:
    """Return the basis index of an ``n``-character bitstring (qubit 0 first)."""
    if len(bits) != n or any(c not in "01" for c in bits):
        raise CircuitError(f"expected a {n}-bit string, got {bits!r}")
    return int(bits, 2)


def format_bits(index: int, n: int) -> str:
    return format(index, f"0{n}b") if n else ""


@dataclass(frozen=True)
class Gate:
    kind: str
    operands: tuple[int, ...]
    marked: frozenset[str] = frozenset()
    angle: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise CircuitError(f"unknown gate kind {self.kind!r}")
        ops = tuple(int(q) for q in self.operands)
        object.__setattr__(self, "operands", ops)
        object.__setattr__(self, "marked", frozenset(self.marked))
        if len(set(ops)) != len(ops) or any(q < 0 for q in ops):
            raise CircuitError(f"{self.kind} operands must be distinct and non-negative: {ops}")
        arity = len(ops)
        if self.kind in ONE_QUBIT and arity != 1:
            raise CircuitError(f"{self.kind} takes one qubit, got {arity}")
        if self.kind in TWO_QUBIT and arity != 2:
            raise CircuitError(f"{self.kind} takes two qubits, got {arity}")
        if self.kind in MULTI and arity < 2:
            raise CircuitError(f"{self.kind} needs at least one control")
        if self.kind == "PhaseOracle":
            if not self.marked:
                raise CircuitError("PhaseOracle needs a non-empty marked set")
            for bits in self.marked:
                parse_bits(bits, arity)

    @property
    def controls(self) -> tuple[int, ...]:
        return self.operands[:-1]

    @property
    def target(self) -> int:
        return self.operands[-1]

    def to_dict(self) -> dict:
        d: dict = {"kind": self.kind, "operands": list(self.operands)}
        if self.kind == "PhaseOracle":
            d["marked"] = sorted(self.marked)
        if self.kind == "P":
            d["angle"] = self.angle
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Gate":
        return cls(d["kind"], tuple(d["operands"]), frozenset(d.get("marked", ())), float(d.get("angle", 0.0)))


@dataclass(frozen=True)
class Circuit:
    width: int
    gates: tuple[Gate, ...] = ()
    ancilla_count: int = 0

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        if self.width < 1 or self.ancilla_count < 0:
            raise CircuitError("width must be >= 1 and ancilla_count >= 0")
        total = self.total_width
        for g in self.gates:
            if max(g.operands) >= total:
                raise CircuitError(f"{g.kind}{g.operands} does not fit in {total} qubits")

    @property
    def total_width(self) -> int:
        return self.width + self.ancilla_count

    def __add__(self, other: "Circuit") -> "Circuit":
        if other.width != self.width:
            raise CircuitError("cannot concatenate circuits of different width")
        return Circuit(self.width, self.gates + other.gates, max(self.ancilla_count, other.ancilla_count))

    def __len__(self) -> int:
        return len(self.gates)

    def with_ancillas(self, count: int) -> "Circuit":
        return Circuit(self.width, self.gates, count)

    def is_lowered(self) -> bool:
        return all(g.kind in LOWERED for g in self.gates)

    def to_dict(self) -> dict:
        return {"width": self.width, "ancillas": self.ancilla_count, "gates": [g.to_dict() for g in self.gates]}

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, d: dict) -> "Circuit":
        try:
            return cls(int(d["width"]), tuple(Gate.from_dict(g) for g in d.get("gates", ())), int(d.get("ancillas", 0)))
        except (KeyError, TypeError) as exc:
            raise CircuitError(f"malformed circuit document: {exc}") from exc

    @classmethod
    def from_json(cls, text: str) -> "Circuit":
        return cls.from_dict(json.loads(text))


def _check_subset(n: int, subset: Sequence[int]) -> tuple[int, ...]:
    qs = tuple(int(q) for q in subset)
    if not qs:
        raise CircuitError("diffusion subset must be non-empty")
    if len(set(qs)) != len(qs):
        raise CircuitError(f"duplicate qubits in subset {qs}")
    if any(q < 0 or q >= n for q in qs):
        raise CircuitError(f"subset {qs} out of range for {n} qubits")
    return qs


def _mcz_on(qubits: Sequence[int]) -> list[Gate]:
    if len(qubits) == 1:
        return [Gate("Z", (qubits[0],))]
    return [Gate("MCZ", tuple(qubits))]


def build_oracle(n: int, targets: Iterable[str]) -> Circuit:
    """Phase oracle flipping the sign of every marked basis state.

    Each marked string becomes an MCZ over all ``n`` qubits, conjugated by X
    on the positions where the string has a ``0``.
    """
    marked = sorted(set(targets))
    if not marked:
        raise CircuitError("oracle needs at least one target")
    gates: list[Gate] = []
    for bits in marked:
        parse_bits(bits, n)
        flips = [Gate("X", (q,)) for q, c in enumerate(bits) if c == "0"]
        gates += flips + _mcz_on(range(n)) + flips
    return Circuit(n, tuple(gates))


def build_local_diffusion(n: int, subset: Sequence[int]) -> Circuit:
    """Inversion about the mean inside each block of states that agree off ``subset``.

    Realized as H/X layers around an MCZ on the subset, which implements
    ``-(2|psi><psi| - I)`` on those qubits; the sign is a global phase.
    """
    qs = _check_subset(n, subset)
    layer_h = [Gate("H", (q,)) for q in qs]
    layer_x = [Gate("X", (q,)) for q in qs]
    return Circuit(n, tuple(layer_h + layer_x + _mcz_on(qs) + layer_x + layer_h))


def build_global_diffusion(n: int) -> Circuit:
    if n < 1:
        raise CircuitError("n must be >= 1")
    return build_local_diffusion(n, range(n))


# ---------------------------------------------------------------------------
# cost model

@dataclass(frozen=True)
class LinearCost:
    """``slope * width + offset``, with exact values for listed small widths."""

    slope: int
    offset: int
    overrides: tuple[tuple[int, int], ...] = ()

    def __call__(self, width: int) -> int:
        for w, value in self.overrides:
            if w == width:
                return value
        return max(0, self.slope * width + self.offset)

    def to_dict(self) -> dict:
        return {"slope": self.slope, "offset": self.offset, "overrides": [list(p) for p in self.overrides]}


# Depth per construct is calibrated so one 6-qubit Grover iteration (oracle +
# diffusion) costs 126 units. CNOTs per width-w MCZ: CZ=1, CCZ=6, then 4 per
# extra qubit, which puts the three-call 4-qubit local-diffusion circuit at 33.
CALIBRATED_DEPTH = LinearCost(12, -9)
CALIBRATED_CNOT = LinearCost(4, -6, ((1, 0), (2, 1)))


@dataclass(frozen=True)
class CostModel:
    depth_1q: int = 1
    depth_cnot: int = 1
    mcx_scheme: str = "borrowed-ancilla-linear"
    oracle_depth_fn: LinearCost = CALIBRATED_DEPTH
    oracle_cnot_fn: LinearCost = CALIBRATED_CNOT
    diffusion_depth_fn: LinearCost = CALIBRATED_DEPTH
    diffusion_cnot_fn: LinearCost = CALIBRATED_CNOT

    def __post_init__(self):
        if self.mcx_scheme not in MCX_SCHEMES:
            raise CircuitError(f"unknown mcx scheme {self.mcx_scheme!r}")
        if self.depth_1q < 1 or self.depth_cnot < 1:
            raise CircuitError("depth units must be positive")

    def oracle_depth(self, n: int) -> int:
        return self.oracle_depth_fn(n)

    def oracle_cnots(self, n: int) -> int:
        return self.oracle_cnot_fn(n)

    def diffusion_depth(self, width: int) -> int:
        return self.diffusion_depth_fn(width)

    def diffusion_cnots(self, width: int) -> int:
        return self.diffusion_cnot_fn(width)

    def ancillas_needed(self, max_controls: int) -> int:
        if max_controls < 3:
            return 0
        return {"borrowed-ancilla-linear": 1, "v-chain": max_controls - 2, "no-ancilla-recursive": 0}[self.mcx_scheme]

    def to_dict(self) -> dict:
        return {
            "depth_1q": self.depth_1q,
            "depth_cnot": self.depth_cnot,
            "mcx_scheme": self.mcx_scheme,
            "oracle_depth": self.oracle_depth_fn.to_dict(),
            "oracle_cnot": self.oracle_cnot_fn.to_dict(),
            "diffusion_depth": self.diffusion_depth_fn.to_dict(),
            "diffusion_cnot": self.diffusion_cnot_fn.to_dict(),
        }


DEFAULT_COST_MODEL = CostModel()


# ---------------------------------------------------------------------------
# lowering

def _toffoli(a: int, b: int, t: int) -> list[Gate]:
    T, Td = math.pi / 4, -math.pi / 4

    def p(q, ang):
        return Gate("P", (q,), angle=ang)

    cx = lambda c, x: Gate("CNOT", (c, x))  # noqa: E731
    return [
        Gate("H", (t,)), cx(b, t), p(t, Td), cx(a, t), p(t, T), cx(b, t), p(t, Td), cx(a, t),
        p(b, T), p(t, T), Gate("H", (t,)), cx(a, b), p(a, T), p(b, Td), cx(a, b),
    ]


def _mcx_dirty(controls: Sequence[int], target: int, dirty: Sequence[int]) -> list[Gate]:
    """C^k X using k-2 borrowed qubits whose state is restored (4(k-2) Toffolis)."""
    k = len(controls)
    if k == 1:
        return [Gate("CNOT", (controls[0], target))]
    if k == 2:
        return _toffoli(controls[0], controls[1], target)
    anc = list(dirty[: k - 2])
    if len(anc) < k - 2:
        raise InsufficientAncillas(f"{k} controls need {k - 2} borrowed qubits, have {len(dirty)}")
    top = _toffoli(controls[-1], anc[-1], target)
    down: list[Gate] = []
    for i in range(k - 3, 0, -1):
        down += _toffoli(controls[i + 1], anc[i - 1], anc[i])
    base = _toffoli(controls[0], controls[1], anc[0])
    up: list[Gate] = []
    for i in range(1, k - 2):
        up += _toffoli(controls[i + 1], anc[i - 1], anc[i])
    half = down + base + up
    return top + half + top + half


def _mcx_one_ancilla(controls: Sequence[int], target: int, ancilla: int) -> list[Gate]:
    """Linear-depth C^c X with one ancilla (clean or dirty), split into two halves."""
    c = len(controls)
    k1 = (c + 1) // 2
    g1, g2 = list(controls[:k1]), list(controls[k1:])
    first = _mcx_dirty(g1, ancilla, g2 + [target])
    second = _mcx_dirty(g2 + [ancilla], target, g1)
    return first + second + first + second


def _mcx_vchain(controls: Sequence[int], target: int, ancillas: Sequence[int]) -> list[Gate]:
    c = len(controls)
    anc = list(ancillas[: c - 2])
    if len(anc) < c - 2:
        raise InsufficientAncillas(f"v-chain with {c} controls needs {c - 2} ancillas, have {len(ancillas)}")
    compute = _toffoli(controls[0], controls[1], anc[0])
    for i in range(2, c - 1):
        compute += _toffoli(controls[i], anc[i - 2], anc[i - 1])
    uncompute: list[Gate] = []
    for i in range(c - 2, 1, -1):
        uncompute += _toffoli(controls[i], anc[i - 2], anc[i - 1])
    uncompute += _toffoli(controls[0], controls[1], anc[0])
    return compute + _toffoli(controls[-1], anc[-1], target) + uncompute


def _parity_phase_mcz(qubits: Sequence[int]) -> list[Gate]:
    """Ancilla-free C^{k-1}Z from the expansion of x_1...x_k into subset parities.

    Each non-empty subset S contributes a phase of +-pi/2^(k-1) on the parity of
    S, computed onto the last member of S with CNOTs and uncomputed after.
    """
    k = len(qubits)
    unit = math.pi / 2 ** (k - 1)
    gates: list[Gate] = []
    for mask in range(1, 2**k):
        members = [qubits[i] for i in range(k) if mask >> i & 1]
        sign = 1 if len(members) % 2 else -1
        head, last = members[:-1], members[-1]
        ladder = [Gate("CNOT", (q, last)) for q in head]
        gates += ladder + [Gate("P", (last,), angle=sign * unit)] + ladder[::-1]
    return gates


def _lower_mcx(controls: Sequence[int], target: int, scheme: str, ancillas: Sequence[int]) -> list[Gate]:
    c = len(controls)
    if c == 1:
        return [Gate("CNOT", (controls[0], target))]
    if c == 2:
        return _toffoli(controls[0], controls[1], target)
    if scheme == "borrowed-ancilla-linear":
        if not ancillas:
            raise InsufficientAncillas(f"{c}-control MCX needs 1 ancilla under {scheme}")
        return _mcx_one_ancilla(controls, target, ancillas[0])
    if scheme == "v-chain":
        return _mcx_vchain(controls, target, ancillas)
    h = [Gate("H", (target,))]
    return h + _parity_phase_mcz(list(controls) + [target]) + h


def _lower_gate(g: Gate, scheme: str, ancillas: Sequence[int]) -> list[Gate]:
    k = g.kind
    if k in LOWERED:
        return [g]
    if k == "CZ":
        a, b = g.operands
        return [Gate("H", (b,)), Gate("CNOT", (a, b)), Gate("H", (b,))]
    if k == "SWAP":
        a, b = g.operands
        return [Gate("CNOT", (a, b)), Gate("CNOT", (b, a)), Gate("CNOT", (a, b))]
    if k == "MCX":
        return _lower_mcx(g.controls, g.target, scheme, ancillas)
    if k == "MCZ":
        if len(g.operands) == 2:
            return _lower_gate(Gate("CZ", g.operands), scheme, ancillas)
        if scheme == "no-ancilla-recursive":
            return _parity_phase_mcz(g.operands)
        h = [Gate("H", (g.target,))]
        return h + _lower_mcx(g.controls, g.target, scheme, ancillas) + h
    # PhaseOracle
    out: list[Gate] = []
    ops = g.operands
    for bits in sorted(g.marked):
        flips = [Gate("X", (ops[i],)) for i, c in enumerate(bits) if c == "0"]
        core = [Gate("Z", (ops[0],))] if len(ops) == 1 else _lower_gate(Gate("MCZ", ops), scheme, ancillas)
        out += flips + core + flips
    return out


def _max_controls(circuit: Circuit) -> int:
    worst = 0
    for g in circuit.gates:
        if g.kind in MULTI or g.kind == "PhaseOracle":
            worst = max(worst, len(g.operands) - 1)
    return worst


def lower(circuit: Circuit, cost_model: CostModel = DEFAULT_COST_MODEL, *, allocate: bool = True) -> Circuit:
    """Rewrite every gate into H/X/Z/P and CNOT.

    With ``allocate`` the circuit is widened to the ancilla budget the scheme
    needs; otherwise the existing ``ancilla_count`` must suffice. Ancillas
    start and end in ``|0>``.
    """
    needed = cost_model.ancillas_needed(_max_controls(circuit))
    count = circuit.ancilla_count
    if needed > count:
        if not allocate:
            raise InsufficientAncillas(
                f"{cost_model.mcx_scheme} needs {needed} ancillas, circuit has {count}"
            )
        count = needed
    ancillas = list(range(circuit.width, circuit.width + count))
    gates: list[Gate] = []
    for g in circuit.gates:
        gates += _lower_gate(g, cost_model.mcx_scheme, ancillas)
    return Circuit(circuit.width, tuple(gates), count)


# ---------------------------------------------------------------------------
# metrics

def depth(circuit: Circuit, cost_model: CostModel = DEFAULT_COST_MODEL) -> int:
    """Longest dependency chain after ASAP layering (lowers first if needed)."""
    if not circuit.is_lowered():
        circuit = lower(circuit, cost_model)
    level = [0] * circuit.total_width
    for g in circuit.gates:
        unit = cost_model.depth_1q if len(g.operands) == 1 else cost_model.depth_cnot
        top = max(level[q] for q in g.operands) + unit
        for q in g.operands:
            level[q] = top
    return max(level, default=0)


def cnot_count(circuit: Circuit, cost_model: CostModel = DEFAULT_COST_MODEL) -> int:
    if not circuit.is_lowered():
        circuit = lower(circuit, cost_model)
    return sum(1 for g in circuit.gates if g.kind == "CNOT")
