"""Step sequences for Grover, partial and local-diffusion search, plus run reports."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from . import simulator
from .circuit import (
    DEFAULT_COST_MODEL,
    Circuit,
    CostModel,
    build_local_diffusion,
    build_oracle,
    cnot_count,
    depth,
    lower,
    parse_bits,
)
from .simulator import Histogram, NoiseModel, StateVector

VARIANTS = ("grover", "partial", "efficient")
TAILS = ("none", "extra-first-local")


@dataclass(frozen=True)
class Step:
    """One oracle call followed by a diffusion over ``subset``."""

    subset: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "subset", tuple(int(q) for q in self.subset))

    def is_global(self, n: int) -> bool:
        return sorted(self.subset) == list(range(n))


def suffix(n: int, width: int) -> tuple[int, ...]:
    return tuple(range(n - width, n))


def prefix(width: int) -> tuple[int, ...]:
    return tuple(range(width))


def grover_sequence(n: int, k: int) -> list[Step]:
    if k < 0:
        raise ValueError("k must be >= 0")
    return [Step(tuple(range(n)))] * k


PRESETS = {
    # local over the two low qubits, global, local again
    "paper-4q": ("local", "global", "local"),
    "paper-6q": ("local", "global", "local"),
}


def partial_sequence(n: int, m: int, pattern: Sequence[str] | str) -> list[Step]:
    """Oracle + diffusion per pattern entry: ``"local"`` diffuses the last ``m`` qubits."""
    if isinstance(pattern, str):
        if pattern not in PRESETS:
            raise ValueError(f"unknown preset {pattern!r}")
        pattern = PRESETS[pattern]
    if not 1 <= m <= n:
        raise ValueError(f"local width m={m} invalid for n={n}")
    steps = []
    for kind in pattern:
        if kind == "local":
            steps.append(Step(suffix(n, m)))
        elif kind == "global":
            steps.append(Step(tuple(range(n))))
        else:
            raise ValueError(f"pattern entries must be 'local' or 'global', got {kind!r}")
    return steps


def efficient_sequence(
    n: int,
    m: int,
    k1: int = 1,
    k2: int = 1,
    k: int = 1,
    tail: str = "none",
    suffix_first: bool = True,
) -> list[Step]:
    """``k`` repetitions of k1 first-subset steps then k2 complementary steps.

    The first subset has ``m`` qubits (the trailing ones unless
    ``suffix_first`` is false); ``tail="extra-first-local"`` appends one more
    first-subset step.
    """
    if not 1 <= m < n:
        raise ValueError(f"need 1 <= m < n, got n={n}, m={m}")
    if k1 < 1 or k2 < 1 or k < 0:
        raise ValueError("k1, k2 must be >= 1 and k >= 0")
    if tail not in TAILS:
        raise ValueError(f"tail must be one of {TAILS}")
    first = suffix(n, m) if suffix_first else prefix(m)
    second = tuple(q for q in range(n) if q not in first)
    steps = ([Step(first)] * k1 + [Step(second)] * k2) * k
    if tail == "extra-first-local":
        steps.append(Step(first))
    return steps


@dataclass(frozen=True)
class GroverCount:
    formula: int
    argmax: int


def grover_iteration_count(n: int) -> GroverCount:
    """Both the closed-form floor(pi/(4 theta) - 1) and the probability-maximising k."""
    if n < 1:
        raise ValueError("n must be >= 1")
    theta = math.asin(2.0 ** (-n / 2))
    formula = max(0, math.floor(math.pi / (4 * theta) - 1))
    center = math.pi / (4 * theta) - 0.5
    cands = {max(0, math.floor(center)), math.ceil(center)}
    argmax = max(sorted(cands), key=lambda k: math.sin((2 * k + 1) * theta) ** 2)
    return GroverCount(formula, argmax)


# ---------------------------------------------------------------------------
# specs and execution

@dataclass
class SearchSpec:
    variant: str
    n: int
    target: str
    m: int | None = None
    k: int = 1
    k1: int = 1
    k2: int = 1
    tail: str = "none"
    pattern: tuple[str, ...] | str | None = None
    steps: list[tuple[int, ...]] | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        parse_bits(self.target, self.n)
        if self.variant in ("partial", "efficient"):
            if self.m is None:
                raise ValueError(f"{self.variant} search needs m")
            if not 1 <= self.m < self.n:
                raise ValueError(f"need 1 <= m < n, got m={self.m}")
        if self.variant == "efficient" and (self.k1 < 1 or self.k2 < 1):
            raise ValueError("k1, k2 must be >= 1")
        if self.steps is not None:
            for s in self.steps:
                if not s or len(set(s)) != len(s) or any(q < 0 or q >= self.n for q in s):
                    raise ValueError(f"invalid diffusion subset {s}")

    def sequence(self) -> list[Step]:
        if self.steps is not None:
            return [Step(s) for s in self.steps]
        if self.variant == "grover":
            return grover_sequence(self.n, self.k)
        if self.variant == "partial":
            return partial_sequence(self.n, self.m, self.pattern or "paper-4q")
        return efficient_sequence(self.n, self.m, self.k1, self.k2, self.k, self.tail)

    def to_dict(self) -> dict:
        d = asdict(self)
        if isinstance(d["pattern"], tuple):
            d["pattern"] = list(d["pattern"])
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "SearchSpec":
        d = dict(d)
        if isinstance(d.get("pattern"), list):
            d["pattern"] = tuple(d["pattern"])
        if d.get("steps") is not None:
            d["steps"] = [tuple(s) for s in d["steps"]]
        return cls(**d)


def preparation(n: int) -> Circuit:
    from .circuit import Gate

    return Circuit(n, tuple(Gate("H", (q,)) for q in range(n)))


def build_circuit(n: int, steps: Sequence[Step], targets: Sequence[str], prepare: bool = True) -> Circuit:
    """Abstract (unlowered) circuit: H layer, then oracle + diffusion per step."""
    circ = preparation(n) if prepare else Circuit(n)
    oracle = build_oracle(n, targets)
    for step in steps:
        circ = circ + oracle + build_local_diffusion(n, step.subset)
    return circ


def run_steps(n: int, steps: Sequence[Step], targets: Sequence[str]) -> StateVector:
    """Amplitude-space execution from the uniform state."""
    state = StateVector.uniform(n)
    for step in steps:
        state = simulator.apply_oracle_fast(state, targets)
        state = simulator.apply_local_diffusion_fast(state, step.subset)
    return state


def success_probability(n: int, steps: Sequence[Step], target: str) -> float:
    return run_steps(n, steps, [target]).probability(target)


def ist(histogram: Histogram, target: str) -> float:
    """Target count over the count of the most frequent wrong outcome."""
    if histogram.shots < 1:
        raise ValueError("histogram has no shots")
    hit = histogram.get(target)
    wrong = max((c for b, c in histogram.counts.items() if b != target), default=0)
    if hit == 0:
        return 0.0
    if wrong == 0:
        return math.inf
    return hit / wrong


def model_cost(n: int, steps: Sequence[Step], cost_model: CostModel = DEFAULT_COST_MODEL) -> tuple[int, int]:
    """(d_total, #CNOT) from the cost model: per-call oracle plus per-step diffusion."""
    d = sum(cost_model.oracle_depth(n) + cost_model.diffusion_depth(len(s.subset)) for s in steps)
    c = sum(cost_model.oracle_cnots(n) + cost_model.diffusion_cnots(len(s.subset)) for s in steps)
    return d, c


@dataclass
class RunReport:
    success_probability: float
    oracle_calls: int
    ist: float | None = None
    histogram: Histogram | None = field(default=None, repr=False)
    depth: int | None = None
    cnot_count: int | None = None
    model_depth: int | None = None
    model_cnot_count: int | None = None
    observed_success: float | None = None

    def to_dict(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k != "histogram"}
        if d["ist"] is not None and math.isinf(d["ist"]):
            d["ist"] = "inf"
        if self.histogram is not None:
            d["shots"] = self.histogram.shots
        return d


def execute(
    spec: SearchSpec,
    shots: int | None = None,
    seed: int | None = None,
    noise: NoiseModel | None = None,
    cost_model: CostModel = DEFAULT_COST_MODEL,
    with_metrics: bool = True,
) -> RunReport:
    """Run a search: ideal probability always, histogram and IST when ``shots`` is set."""
    steps = spec.sequence()
    n = spec.n
    ideal = run_steps(n, steps, [spec.target])
    report = RunReport(ideal.probability(spec.target), len(steps))
    report.model_depth, report.model_cnot_count = model_cost(n, steps, cost_model)
    lowered = None
    if with_metrics or (noise is not None and not noise.is_ideal):
        lowered = lower(build_circuit(n, steps, [spec.target]), cost_model)
        report.depth = depth(lowered, cost_model)
        report.cnot_count = cnot_count(lowered, cost_model)
    if shots is not None:
        if shots < 1:
            raise ValueError("shots must be >= 1")
        if noise is None or noise.is_ideal:
            hist = simulator.sample(ideal, shots, seed)
        else:
            hist = simulator.run_noisy(lowered, noise, shots, seed)
        report.histogram = hist
        report.ist = ist(hist, spec.target)
        report.observed_success = hist.frequency(spec.target)
    return report
