"""Grover, partial and local-diffusion quantum search: circuits, simulation and analysis."""
from .algorithms import (
    RunReport,
    SearchSpec,
    Step,
    efficient_sequence,
    execute,
    grover_iteration_count,
    grover_sequence,
    ist,
    partial_sequence,
)
from .analytic import evolve, grover_plan, grover_probability, med, plan_iterations
from .circuit import Circuit, CostModel, Gate, build_global_diffusion, build_local_diffusion, build_oracle, lower
from .simulator import Histogram, NoiseModel, StateVector, run, run_noisy, sample
from .transpile import CouplingMap, Layout, route, verify_equivalence

__version__ = "0.1.0"
