"""Multiagent state transition algorithm (MASTA) for box-bounded global minimization."""

from .driver import MastaConfig, RunResult, run
from .harness import ExperimentConfig, RunStats, compute_stats, run_experiment
from .objective import BENCHMARKS, EvalBudget, ProblemSpec, evaluate, make_benchmark
from .rules import CommPolicy, RatePolicy
from .sta import StaParams

__all__ = [
    "BENCHMARKS", "CommPolicy", "EvalBudget", "ExperimentConfig", "MastaConfig", "ProblemSpec",
    "RatePolicy", "RunResult", "RunStats", "StaParams", "compute_stats", "evaluate",
    "make_benchmark", "run", "run_experiment",
]

__version__ = "0.1.0"
