"""Dense state-vector execution, amplitude-space shortcuts, sampling and noise."""
from __future__ import annotations

import io
import json
import os
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .circuit import Circuit, CircuitError, Gate, format_bits, parse_bits

DEFAULT_MAX_QUBITS = 24
NORM_ATOL = 1e-9

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


class SimulationError(ValueError):
    pass


class ResourceCapExceeded(SimulationError):
    """Requested width exceeds the dense-simulation cap."""


def max_qubits() -> int:
    return int(os.environ.get("LOCALSEARCH_MAX_QUBITS", DEFAULT_MAX_QUBITS))


def _check_cap(n: int) -> None:
    cap = max_qubits()
    if n > cap:
        raise ResourceCapExceeded(f"{n} qubits exceeds the dense simulation cap of {cap}")


@dataclass
class StateVector:
    n: int
    amplitudes: np.ndarray

    def __post_init__(self):
        _check_cap(self.n)
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (2**self.n,):
            raise SimulationError(f"expected {2**self.n} amplitudes, got {self.amplitudes.shape}")
        norm = float(np.vdot(self.amplitudes, self.amplitudes).real)
        if abs(norm - 1.0) > NORM_ATOL:
            raise SimulationError(f"state is not normalized (|a|^2 = {norm})")

    @classmethod
    def zero(cls, n: int) -> "StateVector":
        amps = np.zeros(2**n, dtype=complex)
        amps[0] = 1
        return cls(n, amps)

    @classmethod
    def uniform(cls, n: int) -> "StateVector":
        return cls(n, np.full(2**n, 2 ** (-n / 2), dtype=complex))

    @classmethod
    def basis(cls, n: int, bits: str) -> "StateVector":
        amps = np.zeros(2**n, dtype=complex)
        amps[parse_bits(bits, n)] = 1
        return cls(n, amps)

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "StateVector":
        amps = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
        return cls(n, amps / np.linalg.norm(amps))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def probability(self, bits: str) -> float:
        return float(abs(self.amplitudes[parse_bits(bits, self.n)]) ** 2)

    def to_json(self) -> str:
        return json.dumps([[float(a.real), float(a.imag)] for a in self.amplitudes])

    @classmethod
    def from_json(cls, text: str) -> "StateVector":
        pairs = np.asarray(json.loads(text), dtype=float)
        n = int(np.log2(len(pairs)))
        return cls(n, pairs[:, 0] + 1j * pairs[:, 1])


@dataclass(frozen=True)
class NoiseModel:
    p1: float = 0.0
    p2: float = 0.0
    readout_flip: float = 0.0

    def __post_init__(self):
        for name in ("p1", "p2", "readout_flip"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise SimulationError(f"{name} must lie in [0, 1], got {v}")

    @property
    def is_ideal(self) -> bool:
        return self.p1 == self.p2 == self.readout_flip == 0.0


@dataclass
class Histogram:
    counts: dict[str, int]
    shots: int

    def __post_init__(self):
        if sum(self.counts.values()) != self.shots:
            raise SimulationError("histogram counts do not sum to shots")

    def get(self, bits: str) -> int:
        return self.counts.get(bits, 0)

    def frequency(self, bits: str) -> float:
        return self.get(bits) / self.shots

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"#shots={self.shots}\n")
        buf.write("bitstring,count\n")
        for bits in sorted(self.counts):
            buf.write(f"{bits},{self.counts[bits]}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "Histogram":
        shots = None
        counts: dict[str, int] = {}
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#shots="):
                shots = int(line.split("=", 1)[1])
            elif line != "bitstring,count":
                bits, c = line.split(",")
                counts[bits] = int(c)
        total = sum(counts.values())
        return cls(counts, total if shots is None else shots)

    @classmethod
    def from_array(cls, counts: np.ndarray, n: int) -> "Histogram":
        nz = np.nonzero(counts)[0]
        return cls({format_bits(int(i), n): int(counts[i]) for i in nz}, int(counts.sum()))


# ---------------------------------------------------------------------------
# gate kernels on a (batch, 2, 2, ..., 2) tensor; axis q+1 is qubit q

def _sl(ndim: int, fixed: dict[int, int]) -> tuple:
    idx: list = [slice(None)] * ndim
    for q, v in fixed.items():
        idx[q + 1] = v
    return tuple(idx)


def _apply_gate(psi: np.ndarray, g: Gate) -> None:
    """Apply ``g`` in place to a batched state tensor."""
    nd = psi.ndim
    k = g.kind
    ops = g.operands
    if k == "H":
        q = ops[0]
        a0 = psi[_sl(nd, {q: 0})].copy()
        a1 = psi[_sl(nd, {q: 1})]
        psi[_sl(nd, {q: 0})] = (a0 + a1) * _H[0, 0]
        psi[_sl(nd, {q: 1})] = (a0 - a1) * _H[0, 0]
    elif k == "X":
        q = ops[0]
        a0 = psi[_sl(nd, {q: 0})].copy()
        psi[_sl(nd, {q: 0})] = psi[_sl(nd, {q: 1})]
        psi[_sl(nd, {q: 1})] = a0
    elif k == "Z":
        psi[_sl(nd, {ops[0]: 1})] *= -1
    elif k == "P":
        psi[_sl(nd, {ops[0]: 1})] *= np.exp(1j * g.angle)
    elif k in ("CNOT", "MCX"):
        ctrl = {c: 1 for c in ops[:-1]}
        t = ops[-1]
        s0 = _sl(nd, {**ctrl, t: 0})
        s1 = _sl(nd, {**ctrl, t: 1})
        a0 = psi[s0].copy()
        psi[s0] = psi[s1]
        psi[s1] = a0
    elif k in ("CZ", "MCZ"):
        psi[_sl(nd, {q: 1 for q in ops})] *= -1
    elif k == "SWAP":
        a, b = ops
        s01 = _sl(nd, {a: 0, b: 1})
        s10 = _sl(nd, {a: 1, b: 0})
        tmp = psi[s01].copy()
        psi[s01] = psi[s10]
        psi[s10] = tmp
    elif k == "PhaseOracle":
        for bits in g.marked:
            psi[_sl(nd, {q: int(c) for q, c in zip(ops, bits)})] *= -1
    else:  # pragma: no cover - Gate validates kinds
        raise CircuitError(f"cannot simulate {k}")


def _embed(state: StateVector, ancillas: int) -> np.ndarray:
    amps = np.zeros(2 ** (state.n + ancillas), dtype=complex)
    amps[:: 2**ancillas] = state.amplitudes
    return amps


def run(circuit: Circuit, initial: StateVector | None = None) -> StateVector:
    """Apply ``circuit`` to ``initial`` (``|0...0>`` by default).

    Ancillas are appended in ``|0>`` as the least significant qubits and must
    be returned to ``|0>``; they are stripped from the result.
    """
    if initial is None:
        initial = StateVector.zero(circuit.width)
    if initial.n != circuit.width:
        raise SimulationError(f"circuit width {circuit.width} does not match state of {initial.n} qubits")
    total = circuit.total_width
    _check_cap(total)
    psi = _embed(initial, circuit.ancilla_count).reshape((1,) + (2,) * total)
    for g in circuit.gates:
        _apply_gate(psi, g)
    flat = psi.reshape(2**total, order="C")
    anc = circuit.ancilla_count
    if anc:
        block = flat.reshape(2**circuit.width, 2**anc)
        leak = float(np.sum(np.abs(block[:, 1:]) ** 2))
        if leak > NORM_ATOL:
            raise SimulationError(f"ancillas not returned to |0> (leaked weight {leak:.3g})")
        flat = block[:, 0]
    return StateVector(circuit.width, flat.copy())


def unitary(circuit: Circuit) -> np.ndarray:
    """Full unitary on the data qubits, column by column (ancillas in |0>)."""
    n = circuit.width
    cols = []
    for i in range(2**n):
        e = np.zeros(2**n, dtype=complex)
        e[i] = 1
        cols.append(run(circuit, StateVector(n, e)).amplitudes)
    return np.stack(cols, axis=1)


# ---------------------------------------------------------------------------
# amplitude-space shortcuts

def apply_oracle_fast(state: StateVector, targets: Iterable[str]) -> StateVector:
    amps = state.amplitudes.copy()
    marked = set(targets)
    if not marked:
        raise CircuitError("oracle needs at least one target")
    for bits in marked:
        amps[parse_bits(bits, state.n)] *= -1
    return StateVector(state.n, amps)


def apply_local_diffusion_fast(state: StateVector, subset: Sequence[int]) -> StateVector:
    """``(2|psi><psi| - I)`` on ``subset``: inversion about each block mean."""
    n = state.n
    qs = tuple(int(q) for q in subset)
    if not qs or len(set(qs)) != len(qs) or any(q < 0 or q >= n for q in qs):
        raise CircuitError(f"invalid diffusion subset {qs} for {n} qubits")
    t = state.amplitudes.reshape((2,) * n)
    out = 2 * t.mean(axis=qs, keepdims=True) - t
    return StateVector(n, out.reshape(-1))


def apply_global_diffusion_fast(state: StateVector) -> StateVector:
    amps = state.amplitudes
    return StateVector(state.n, 2 * amps.mean() - amps)


# ---------------------------------------------------------------------------
# sampling

def _rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def sample(state: StateVector, shots: int, seed: int | None = None) -> Histogram:
    """Draw ``shots`` computational-basis outcomes from ``|a_i|^2``."""
    if shots < 1:
        raise SimulationError("shots must be >= 1")
    p = state.probabilities()
    p = p / p.sum()
    counts = _rng(seed).multinomial(shots, p)
    return Histogram.from_array(counts, state.n)


# Pauli labels as (x, z) bit pairs: I, X, Y, Z
_PAULI_XZ = ((0, 0), (1, 0), (1, 1), (0, 1))


def _apply_paulis(psi: np.ndarray, rows: np.ndarray, qubit: int, labels: np.ndarray) -> None:
    """Apply per-trajectory Paulis (labels 0..3) on one qubit; phases dropped."""
    nd = psi.ndim
    xs = rows[np.isin(labels, (1, 2))]
    zs = rows[np.isin(labels, (2, 3))]
    if zs.size:
        idx = list(_sl(nd, {qubit: 1}))
        idx[0] = zs
        psi[tuple(idx)] *= -1
    if xs.size:
        i0 = list(_sl(nd, {qubit: 0}))
        i1 = list(_sl(nd, {qubit: 1}))
        i0[0] = xs
        i1[0] = xs
        a0 = psi[tuple(i0)].copy()
        psi[tuple(i0)] = psi[tuple(i1)]
        psi[tuple(i1)] = a0


def run_noisy(
    circuit: Circuit,
    noise: NoiseModel,
    shots: int,
    seed: int | None = None,
    initial: StateVector | None = None,
    batch: int = 8192,
) -> Histogram:
    """Monte Carlo Pauli trajectories, one measured shot per trajectory.

    After every 1-qubit gate a uniformly random non-identity Pauli hits the
    qubit with probability ``p1``; after every 2-qubit gate one of the 15
    non-identity two-qubit Paulis is applied with probability ``p2``. Measured
    bits (data qubits only) then flip independently with ``readout_flip``.
    """
    if shots < 1:
        raise SimulationError("shots must be >= 1")
    if initial is None:
        initial = StateVector.zero(circuit.width)
    if initial.n != circuit.width:
        raise SimulationError("initial state width mismatch")
    total = circuit.total_width
    _check_cap(total)
    n = circuit.width
    rng = _rng(seed)
    base = _embed(initial, circuit.ancilla_count)
    counts = np.zeros(2**n, dtype=np.int64)
    done = 0
    while done < shots:
        b = min(batch, shots - done)
        psi = np.repeat(base[None, :], b, axis=0).reshape((b,) + (2,) * total)
        for g in circuit.gates:
            _apply_gate(psi, g)
            arity = len(g.operands)
            p = noise.p1 if arity == 1 else noise.p2
            if p == 0.0:
                continue
            if arity > 2:
                raise SimulationError("noisy execution needs a lowered circuit")
            hit = np.nonzero(rng.random(b) < p)[0]
            if not hit.size:
                continue
            if arity == 1:
                labels = rng.integers(1, 4, size=hit.size)
                _apply_paulis(psi, hit, g.operands[0], labels)
            else:
                pair = rng.integers(1, 16, size=hit.size)
                _apply_paulis(psi, hit, g.operands[0], pair // 4)
                _apply_paulis(psi, hit, g.operands[1], pair % 4)
        probs = np.abs(psi.reshape(b, 2**n, 2 ** circuit.ancilla_count)) ** 2
        probs = probs.sum(axis=2)
        probs /= probs.sum(axis=1, keepdims=True)
        cdf = np.cumsum(probs, axis=1)
        u = rng.random(b)[:, None]
        outcomes = np.minimum((cdf < u).sum(axis=1), 2**n - 1)
        if noise.readout_flip > 0:
            flips = rng.random((b, n)) < noise.readout_flip
            weights = 1 << np.arange(n - 1, -1, -1)
            outcomes = outcomes ^ (flips.astype(np.int64) @ weights)
        counts += np.bincount(outcomes, minlength=2**n)
        done += b
    return Histogram.from_array(counts, n)
