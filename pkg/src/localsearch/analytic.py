"""Closed-form evolution of the two-subset local search in a 4-class basis.

Basis order is (target, rest of the first search's target block, rest of the
second search's target block, everything else). The first local search
diffuses over ``m`` qubits (blocks of ``2**m`` states); the second over the
complementary ``n - m``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import mpmath
import numpy as np

from .circuit import DEFAULT_COST_MODEL, CostModel


class NotReachable(Exception):
    """Raised by :func:`require_plan` when a threshold is never met."""


@dataclass(frozen=True)
class Angles:
    n: int
    m: int
    theta: float
    gamma: float
    sin_theta: float
    cos_theta: float
    sin_gamma: float
    cos_gamma: float

    @classmethod
    def of(cls, n: int, m: int) -> "Angles":
        if not 1 <= m < n:
            raise ValueError(f"need 1 <= m < n, got n={n}, m={m}")
        # sin^2 = 2^-m exactly; cos from -expm1 keeps digits for large m
        st = 2.0 ** (-m / 2)
        ct = math.sqrt(-math.expm1(-m * math.log(2)))
        sg = 2.0 ** ((m - n) / 2)
        cg = math.sqrt(-math.expm1((m - n) * math.log(2)))
        return cls(n, m, math.atan2(st, ct), math.atan2(sg, cg), st, ct, sg, cg)


@dataclass(frozen=True)
class AnalyticState:
    c_t: float
    c_ntm: float
    c_ntnm: float
    c_u: float

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.c_t, self.c_ntm, self.c_ntnm, self.c_u])

    @classmethod
    def from_vector(cls, v) -> "AnalyticState":
        return cls(*(float(x) for x in v))

    @property
    def probability(self) -> float:
        return self.c_t**2

    def norm(self) -> float:
        return float(np.linalg.norm(self.vector))


@dataclass(frozen=True)
class StepMatrix:
    matrix: np.ndarray
    k1: int
    k2: int

    def __matmul__(self, other):
        if isinstance(other, AnalyticState):
            return AnalyticState.from_vector(self.matrix @ other.vector)
        return self.matrix @ other


def initial_state(n: int, m: int) -> AnalyticState:
    a = Angles.of(n, m)
    return AnalyticState(
        a.sin_gamma * a.sin_theta,
        a.sin_gamma * a.cos_theta,
        a.cos_gamma * a.sin_theta,
        a.cos_gamma * a.cos_theta,
    )


def _abc(s: float, c: float, k: int) -> tuple[float, float, float]:
    sign = -1.0 if k % 2 else 1.0
    return s * s + sign * c * c, s * c * (1 - sign), c * c + sign * s * s


def gm_power(angles: Angles, k1: int) -> StepMatrix:
    """``k1`` rounds of oracle + diffusion over the first subset."""
    if k1 < 0:
        raise ValueError("k1 must be >= 0")
    a, b, c = _abc(angles.sin_theta, angles.cos_theta, k1)
    co, si = math.cos(2 * k1 * angles.theta), math.sin(2 * k1 * angles.theta)
    mat = np.array([
        [co, si, 0, 0],
        [-si, co, 0, 0],
        [0, 0, a, b],
        [0, 0, b, c],
    ])
    return StepMatrix(mat, k1, 0)


def gnm_power(angles: Angles, k2: int) -> StepMatrix:
    """``k2`` rounds of oracle + diffusion over the complementary subset."""
    if k2 < 0:
        raise ValueError("k2 must be >= 0")
    a, b, c = _abc(angles.sin_gamma, angles.cos_gamma, k2)
    co, si = math.cos(2 * k2 * angles.gamma), math.sin(2 * k2 * angles.gamma)
    mat = np.array([
        [co, 0, si, 0],
        [0, a, 0, b],
        [-si, 0, co, 0],
        [0, b, 0, c],
    ])
    return StepMatrix(mat, 0, k2)


def step_matrix(n: int, m: int, k1: int = 1, k2: int = 1) -> StepMatrix:
    if k1 < 1 or k2 < 1:
        raise ValueError("k1 and k2 must be >= 1")
    ang = Angles.of(n, m)
    return StepMatrix(gnm_power(ang, k2).matrix @ gm_power(ang, k1).matrix, k1, k2)


def _substeps(n: int, m: int, k1: int, k2: int) -> np.ndarray:
    """Matrices taking a step-boundary state to each oracle call inside the step."""
    ang = Angles.of(n, m)
    g1 = gm_power(ang, k1).matrix
    out = [gm_power(ang, j).matrix for j in range(1, k1 + 1)]
    out += [gnm_power(ang, j).matrix @ g1 for j in range(1, k2 + 1)]
    return np.stack(out)


def evolve(n: int, m: int, k1: int = 1, k2: int = 1, k: int = 1) -> list[float]:
    """Target probability after 0..k full steps; ``trace[0] == 2**-n``."""
    if k < 0:
        raise ValueError("k must be >= 0")
    M = step_matrix(n, m, k1, k2).matrix
    v = initial_state(n, m).vector
    trace = [float(v[0] ** 2)]
    for _ in range(k):
        v = M @ v
        trace.append(float(v[0] ** 2))
    return trace


def oracle_trace(n: int, m: int, k1: int = 1, k2: int = 1, calls: int = 1) -> list[float]:
    """Target probability after 0..calls oracle calls of the repeated schedule."""
    subs = _substeps(n, m, k1, k2)
    M = subs[-1]
    v = initial_state(n, m).vector
    trace = [float(v[0] ** 2)]
    while len(trace) <= calls:
        for s in subs:
            trace.append(float((s @ v)[0] ** 2))
        v = M @ v
    return trace[: calls + 1]


def grover_probability(n: int, k: int) -> float:
    if k < 0:
        raise ValueError("k must be >= 0")
    theta = math.asin(2.0 ** (-n / 2))
    return math.sin((2 * k + 1) * theta) ** 2


# ---------------------------------------------------------------------------
# iteration planning

CRITERIA = ("probability", "amplitude")


def required_probability(threshold: float, criterion: str = "probability") -> float:
    """Probability bound a trace must reach.

    ``"amplitude"`` reads the threshold as a two-decimal bound on the target
    amplitude (98% becomes amplitude 0.99, probability 0.9801).
    """
    if criterion not in CRITERIA:
        raise ValueError(f"criterion must be one of {CRITERIA}")
    if not 0.0 <= threshold < 1.0:
        raise ValueError("threshold must lie in [0, 1)")
    if criterion == "amplitude":
        return round(math.sqrt(threshold), 2) ** 2
    return threshold


def default_cap(n: int) -> int:
    return 10 * math.ceil(math.pi / 4 * 2 ** (n / 2))


def _mp_probability(n: int, m: int, k1: int, k2: int, calls: int) -> mpmath.mpf:
    """Exact-ish (40 digit) target probability after ``calls`` oracle calls."""
    with mpmath.workdps(40):
        two = mpmath.mpf(2)
        th = mpmath.asin(two ** (-mpmath.mpf(m) / 2))
        ga = mpmath.asin(two ** (mpmath.mpf(m - n) / 2))

        def block(x, j, first):
            sign = -1 if j % 2 else 1
            s, c = mpmath.sin(x), mpmath.cos(x)
            a, b, cc = s * s + sign * c * c, s * c * (1 - sign), c * c + sign * s * s
            co, si = mpmath.cos(2 * j * x), mpmath.sin(2 * j * x)
            if first:
                return mpmath.matrix([[co, si, 0, 0], [-si, co, 0, 0], [0, 0, a, b], [0, 0, b, cc]])
            return mpmath.matrix([[co, 0, si, 0], [0, a, 0, b], [-si, 0, co, 0], [0, b, 0, cc]])

        v = mpmath.matrix([
            mpmath.sin(ga) * mpmath.sin(th), mpmath.sin(ga) * mpmath.cos(th),
            mpmath.cos(ga) * mpmath.sin(th), mpmath.cos(ga) * mpmath.cos(th),
        ])
        per = k1 + k2
        steps, rem = divmod(calls, per)
        if steps:
            v = (block(ga, k2, False) * block(th, k1, True)) ** steps * v
        if rem:
            if rem <= k1:
                v = block(th, rem, True) * v
            else:
                v = block(ga, rem - k1, False) * (block(th, k1, True) * v)
        return v[0] ** 2


def _confirm(first_hit: int, prob_at, bound: float) -> int:
    """Nudge a float-scan hit to the exact first crossing (within a few calls)."""
    k = first_hit
    while prob_at(k) < bound:
        k += 1
    while k > 0 and prob_at(k - 1) >= bound:
        k -= 1
    return k


def plan_iterations(
    n: int,
    m: int,
    k1: int = 1,
    k2: int = 1,
    threshold: float = 0.98,
    cap: int | None = None,
    criterion: str = "probability",
    chunk: int = 4096,
) -> int | None:
    """Fewest oracle calls whose target probability reaches ``threshold``.

    Counts every oracle call (so totals need not be multiples of k1 + k2).
    Returns ``None`` when no call count up to ``cap`` gets there.
    """
    bound = required_probability(threshold, criterion)
    cap = default_cap(n) if cap is None else cap
    v = initial_state(n, m).vector
    if v[0] ** 2 >= bound:
        return 0
    subs = _substeps(n, m, k1, k2)
    per = len(subs)
    M = subs[-1]
    powers = np.empty((chunk, 4, 4))
    powers[0] = np.eye(4)
    for j in range(1, chunk):
        powers[j] = M @ powers[j - 1]
    jump = M @ powers[-1]
    base = 0
    while base * per < cap:
        starts = powers @ v  # states at step boundaries base .. base+chunk-1
        amps = np.einsum("si,ci->cs", subs[:, 0, :], starts)
        hits = np.nonzero(amps.ravel() ** 2 >= bound)[0]
        if hits.size:
            calls = base * per + int(hits[0]) + 1
            if calls > cap:
                return None
            return _confirm(calls, lambda c: _mp_probability(n, m, k1, k2, c), bound)
        v = jump @ v
        base += chunk
    return None


def grover_plan(n: int, threshold: float = 0.98, criterion: str = "probability") -> int:
    """Fewest Grover iterations with ``sin^2((2k+1) theta) >= bound``."""
    bound = required_probability(threshold, criterion)
    theta = math.asin(2.0 ** (-n / 2))
    if bound <= math.sin(theta) ** 2:
        return 0
    guess = max(0, math.ceil((math.asin(math.sqrt(bound)) / theta - 1) / 2))

    def exact(k):
        with mpmath.workdps(40):
            th = mpmath.asin(mpmath.mpf(2) ** (-mpmath.mpf(n) / 2))
            return mpmath.sin((2 * k + 1) * th) ** 2

    return _confirm(guess, exact, bound)


def require_plan(*args, **kwargs) -> int:
    result = plan_iterations(*args, **kwargs)
    if result is None:
        raise NotReachable(f"threshold not reached within the cap: {args} {kwargs}")
    return result


# ---------------------------------------------------------------------------
# partial search in a 3-class basis

def partial_probability(n: int, width: int, pattern: Sequence[str]) -> float:
    """Target probability after oracle+diffusion rounds, ``pattern`` over {"local", "global"}.

    Local rounds diffuse over ``width`` qubits. The state stays uniform on
    (target), (rest of the target's block) and (all other states), so three
    class amplitudes describe it exactly.
    """
    if not 1 <= width <= n:
        raise ValueError("local width must satisfy 1 <= width <= n")
    N, B = 2.0**n, 2.0**width
    t = b = o = 2.0 ** (-n / 2)
    for kind in pattern:
        t = -t
        if kind == "local":
            mean = (t + (B - 1) * b) / B
            t, b = 2 * mean - t, 2 * mean - b
        elif kind == "global":
            mean = (t + (B - 1) * b + (N - B) * o) / N
            t, b, o = 2 * mean - t, 2 * mean - b, 2 * mean - o
        else:
            raise ValueError(f"unknown pattern entry {kind!r}")
    return t * t


# ---------------------------------------------------------------------------
# minimum expected depth

@dataclass(frozen=True)
class MedResult:
    algorithm: str
    n: int
    j_star: int
    d_total: int
    probability: float
    med: float
    schedule: tuple[str, ...] = ()


def _grover_candidates(n, cm, max_j):
    per = cm.oracle_depth(n) + cm.diffusion_depth(n)
    for j in range(1, max_j + 1):
        yield j, j * per, grover_probability(n, j), ("global",) * j


def _efficient_candidates(n, m, cm, max_j):
    trace = oracle_trace(n, m, 1, 1, max_j)
    depth = 0
    for j in range(1, max_j + 1):
        width = m if j % 2 else n - m
        depth += cm.oracle_depth(n) + cm.diffusion_depth(width)
        yield j, depth, trace[j], tuple("first" if i % 2 == 0 else "second" for i in range(j))


def _partial_candidates(n, width, cm, max_j):
    d_loc = cm.oracle_depth(n) + cm.diffusion_depth(width)
    d_glob = cm.oracle_depth(n) + cm.diffusion_depth(n)
    for j in range(1, max_j + 1):
        for a in range(j + 1):
            for b in range(j + 1 - a):
                if a + b == 0:
                    continue
                g = j - a - b
                pattern = ("local",) * a + ("global",) * g + ("local",) * b
                yield j, (a + b) * d_loc + g * d_glob, partial_probability(n, width, pattern), pattern


def med(
    algorithm: str,
    n: int,
    m: int | None = None,
    cost_model: CostModel = DEFAULT_COST_MODEL,
    max_j: int | None = None,
) -> MedResult:
    """Minimise ``d_total(j) / P(j)`` over schedules with up to ``max_j`` oracle calls.

    ``m`` is the first-subset size for ``"efficient"`` (default ``n // 2``) and
    the local diffusion width for ``"partial"`` (default ``n - 2``). Partial
    schedules are local^a global^g local^b with at least one local round.
    """
    if max_j is None:
        max_j = 2 * math.ceil(math.pi / 4 * 2 ** (n / 2)) + 2
    if max_j < 1:
        raise ValueError("max_j must be >= 1")
    if algorithm == "grover":
        cands = _grover_candidates(n, cost_model, max_j)
    elif algorithm == "efficient":
        cands = _efficient_candidates(n, n // 2 if m is None else m, cost_model, max_j)
    elif algorithm == "partial":
        cands = _partial_candidates(n, max(1, n - 2) if m is None else m, cost_model, max_j)
    else:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    best = None
    for j, d_total, p, sched in cands:
        if p <= 0.0:
            continue
        value = d_total / p
        if best is None or value < best.med - 1e-12:
            best = MedResult(algorithm, n, j, d_total, p, value, sched)
    if best is None:
        raise ValueError("target probability is zero for every schedule considered")
    return best
