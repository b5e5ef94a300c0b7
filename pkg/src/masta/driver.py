"""MASTA main loop: per-generation STA on every agent, periodic communication,
global-best tracking, alpha decay on stagnation and the stopping rule."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numpy as np

from .objective import Agent, BudgetExceeded, EvalBudget, ProblemSpec, _init_arrays
from .rules import CommPolicy, communicate_rows
from .sta import StaParams, decay_alpha, step_rows

log = logging.getLogger(__name__)

DEFAULT_HORIZON = 1000
STOP_REASONS = ("stagnation", "max_generations", "max_evals")


@dataclass(frozen=True)
class MastaConfig:
    N: int = 30
    cf: int = 50
    sta: StaParams = field(default_factory=StaParams)
    comm: CommPolicy = field(default_factory=CommPolicy)
    patience: int = 100
    improvement_tol: float = 0.0
    max_generations: Optional[int] = None
    max_evals: Optional[int] = 1_000_000
    seed: int = 0
    comm_burst: bool = False

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("population size N must be at least 2")
        if self.cf < 1:
            raise ValueError("communication frequency cf must be at least 1")
        if self.patience < 1:
            raise ValueError("patience must be at least 1")
        if self.improvement_tol < 0:
            raise ValueError("improvement_tol must be non-negative")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def horizon(self) -> int:
        return self.max_generations if self.max_generations is not None else DEFAULT_HORIZON

    def to_dict(self) -> dict:
        d = asdict(self)
        d["comm"] = self.comm.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "MastaConfig":
        d = dict(d)
        if isinstance(d.get("sta"), dict):
            d["sta"] = StaParams(**d["sta"])
        if isinstance(d.get("comm"), dict):
            d["comm"] = CommPolicy.from_dict(d["comm"])
        return cls(**d)


@dataclass
class RunState:
    """Mutable state of one run; the population lives in ``X`` / ``F`` arrays."""

    g: int
    X: np.ndarray
    F: np.ndarray
    gbest: Agent
    evals: EvalBudget
    params: StaParams
    rng: np.random.Generator
    stagnation: int = 0
    history: list = field(default_factory=list)
    stop_reason: Optional[str] = None

    @property
    def population(self) -> list[Agent]:
        return [Agent(x.copy(), float(f)) for x, f in zip(self.X, self.F)]


@dataclass
class RunResult:
    best_x: np.ndarray
    best_f: float
    evals_used: int
    generations: int
    history: list
    stop_reason: str

    def to_dict(self, config: Optional[MastaConfig] = None,
                spec: Optional[ProblemSpec] = None) -> dict:
        return {
            "config": None if config is None else config.to_dict(),
            "spec": None if spec is None else spec.to_dict(),
            "stop_reason": self.stop_reason,
            "best_f": self.best_f,
            "best_x": self.best_x.tolist(),
            "evals_used": self.evals_used,
            "history": [{"g": g, "best_f": b, "mean_f": m} for g, b, m in self.history],
        }


def init_run(config: MastaConfig, spec: ProblemSpec) -> RunState:
    rng = np.random.default_rng(config.seed)
    budget = EvalBudget(cap=config.max_evals)
    X, F = _init_arrays(spec, config.N, rng, budget)
    i = int(np.argmin(F))
    return RunState(g=0, X=X, F=F, gbest=Agent(X[i].copy(), float(F[i])), evals=budget,
                    params=config.sta, rng=rng)


def _refresh_gbest(state: RunState) -> None:
    i = int(np.argmin(state.F))
    if state.F[i] < state.gbest.fitness:
        state.gbest = Agent(state.X[i].copy(), float(state.F[i]))


def step_generation(state: RunState, config: MastaConfig, spec: ProblemSpec) -> RunState:
    """Advance one generation in place and return the state.

    A budget overrun mid-generation keeps the partial progress, counts the
    generation and sets ``stop_reason`` to ``"max_evals"``.
    """
    before = state.gbest.fitness
    try:
        step_rows(state.X, state.F, state.params, spec, state.rng, state.evals)
        if config.comm_burst or (state.g + 1) % config.cf == 0:
            rounds = config.cf if config.comm_burst else 1
            g_rate = min(state.g + 1, config.horizon)
            for _ in range(rounds):
                best_idx = int(np.argmin(state.F))
                communicate_rows(state.X, state.F, best_idx, config.comm, spec, state.rng,
                                 g_rate, config.horizon, state.evals)
    except BudgetExceeded:
        state.stop_reason = "max_evals"
    _refresh_gbest(state)
    state.g += 1
    if before - state.gbest.fitness > config.improvement_tol:
        state.stagnation = 0
    else:
        state.stagnation += 1
        state.params = decay_alpha(state.params)
    state.history.append((state.g, state.gbest.fitness, float(np.mean(state.F))))
    return state


def check_stop(state: RunState, config: MastaConfig) -> Optional[str]:
    """Reason to stop now, or ``None`` to continue."""
    if state.stop_reason is not None:
        return state.stop_reason
    if config.max_evals is not None and state.evals.used >= config.max_evals:
        return "max_evals"
    if config.max_generations is not None and state.g >= config.max_generations:
        return "max_generations"
    if state.stagnation >= config.patience:
        return "stagnation"
    return None


def run(config: MastaConfig, spec: ProblemSpec) -> RunResult:
    state = init_run(config, spec)
    reason = check_stop(state, config)
    while reason is None:
        step_generation(state, config, spec)
        reason = check_stop(state, config)
    log.debug("%s n=%d seed=%d stopped (%s) after %d generations, best %.6e",
              spec.name, spec.n, config.seed, reason, state.g, state.gbest.fitness)
    return RunResult(best_x=state.gbest.x.copy(), best_f=state.gbest.fitness,
                     evals_used=state.evals.used, generations=state.g,
                     history=list(state.history), stop_reason=reason)


def with_seed(config: MastaConfig, seed: int) -> MastaConfig:
    return replace(config, seed=seed)
