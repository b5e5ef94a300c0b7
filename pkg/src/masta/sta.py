"""Basic state transition algorithm: the four transformation operators
with best-of-SE sampling, plus the rotation-factor schedule.

Operators accept an array of shape ``(..., n)`` and draw independent
randomness for every leading index, so the population driver can sample all
agents' candidate sets in one call.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .objective import Agent, BudgetExceeded, EvalBudget, ProblemSpec, evaluate_batch

OPERATORS = ("expand", "rotate", "axesion", "translate")


@dataclass(frozen=True)
class StaParams:
    alpha: float = 1.0
    alpha_max: float = 1.0
    alpha_min: float = 1e-4
    beta: float = 1.0
    gamma: float = 1.0
    delta: float = 1.0
    se: int = 20
    decay_base: float = 2.0

    def __post_init__(self):
        if not 0 < self.alpha_min <= self.alpha <= self.alpha_max:
            raise ValueError("need 0 < alpha_min <= alpha <= alpha_max")
        if int(self.se) != self.se or self.se < 1:
            raise ValueError("se must be a positive integer")
        if self.decay_base <= 1:
            raise ValueError("decay_base must exceed 1")


def _unit(v):
    """Unit vectors along the last axis and a mask of zero rows.

    Rows are rescaled by their largest entry first so that tiny vectors do
    not underflow to a zero norm.
    """
    scale = np.max(np.abs(v), axis=-1, keepdims=True)
    zero = scale == 0.0
    w = v / np.where(zero, 1.0, scale)
    norm = np.linalg.norm(w, axis=-1, keepdims=True)
    return w / np.where(zero, 1.0, norm), zero


def rotate(x, alpha: float, rng: np.random.Generator) -> np.ndarray:
    """Rotation: ``x + alpha/(n*|x|) * R x`` with ``R`` uniform on [-1, 1]^(n*n).

    The step never exceeds ``alpha`` in length. A zero vector has no
    direction to rotate, so it is moved by :func:`axesion` with magnitude
    ``alpha`` instead.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    R = rng.uniform(-1.0, 1.0, size=x.shape + (n,))
    u, zero = _unit(x)
    out = x + alpha * np.einsum("...ij,...j->...i", R, u) / n
    if np.any(zero):
        rows = zero[..., 0]
        out[rows] = axesion(x[rows], alpha, rng)
    return out


def translate(x_new, x_old, beta: float, rng: np.random.Generator) -> np.ndarray:
    """Translation: step up to ``beta`` further along ``x_new - x_old``.

    Raises ValueError when the two states coincide; callers are expected to
    skip translation in that case.
    """
    x_new = np.asarray(x_new, dtype=float)
    u, zero = _unit(x_new - np.asarray(x_old, dtype=float))
    if np.any(zero):
        raise ValueError("translation direction is undefined for identical states")
    r = rng.uniform(0.0, 1.0, size=x_new.shape[:-1] + (1,))
    return x_new + beta * r * u


def expand(x, gamma: float, rng: np.random.Generator) -> np.ndarray:
    """Expansion: ``x + gamma * R_e x`` with ``R_e`` diagonal standard-Gaussian."""
    x = np.asarray(x, dtype=float)
    return x + gamma * rng.standard_normal(x.shape) * x


def axesion(x, delta: float, rng: np.random.Generator) -> np.ndarray:
    """Axesion: perturb one uniformly chosen coordinate by ``delta * g * x[d]``.

    A zero coordinate is perturbed additively by ``delta * g`` so that the
    search along that axis is not stuck at the origin.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    out = x.reshape(-1, n).copy()
    m = out.shape[0]
    rows = np.arange(m)
    axis = rng.integers(0, n, size=m)
    g = rng.standard_normal(m)
    cur = out[rows, axis]
    out[rows, axis] = cur + delta * g * np.where(cur == 0.0, 1.0, cur)
    return out.reshape(x.shape)


def _candidates(op, X, params, rng, X_prev=None):
    se = params.se
    tile = np.repeat(X[:, None, :], se, axis=1)
    if op == "rotate":
        return rotate(tile, params.alpha, rng)
    if op == "expand":
        return expand(tile, params.gamma, rng)
    if op == "axesion":
        return axesion(tile, params.delta, rng)
    if op == "translate":
        if X_prev is None:
            raise ValueError("translate needs the previous state")
        prev = np.repeat(X_prev[:, None, :], se, axis=1)
        return translate(tile, prev, params.beta, rng)
    raise ValueError(f"unknown operator {op!r}; expected one of {OPERATORS}")


def sample_rows(op: str, X: np.ndarray, F: np.ndarray, params: StaParams, spec: ProblemSpec,
                rng: np.random.Generator, budget: Optional[EvalBudget] = None,
                X_prev: Optional[np.ndarray] = None) -> np.ndarray:
    """Best-of-SE sampling for every row of ``X`` at once, in place.

    Generates ``se`` candidates per row, clips them to the box, evaluates
    them and replaces a row only when its best candidate is strictly
    better. Returns the boolean mask of improved rows.
    """
    m, n = X.shape
    C = spec.clip(_candidates(op, X, params, rng, X_prev), out=True)
    fc = evaluate_batch(spec, C.reshape(m * params.se, n), budget).reshape(m, params.se)
    k = np.argmin(fc, axis=1)
    best_f = fc[np.arange(m), k]
    improved = best_f < F
    X[improved] = C[improved, k[improved]]
    F[improved] = best_f[improved]
    return improved


def sample_best(op: str, agent: Agent, params: StaParams, spec: ProblemSpec,
                rng: np.random.Generator, budget: Optional[EvalBudget] = None,
                previous: Optional[np.ndarray] = None) -> Agent:
    """Apply one operator ``se`` times to ``agent`` and keep the best result.

    ``previous`` is the earlier state required by ``translate``. Exactly
    ``se`` evaluations are charged; when they do not fit in the budget,
    :class:`BudgetExceeded` is raised with ``best`` set to ``agent``.
    """
    X = np.asarray(agent.x, dtype=float)[None, :].copy()
    F = np.array([agent.fitness], dtype=float)
    prev = None if previous is None else np.asarray(previous, dtype=float)[None, :]
    try:
        sample_rows(op, X, F, params, spec, rng, budget, prev)
    except BudgetExceeded as exc:
        exc.best = agent
        raise
    return Agent(X[0], float(F[0]))


def step_rows(X: np.ndarray, F: np.ndarray, params: StaParams, spec: ProblemSpec,
              rng: np.random.Generator, budget: Optional[EvalBudget] = None) -> np.ndarray:
    """One STA iteration for every row, in place.

    Expansion, rotation and axesion run in that order; every row that one of
    them improves immediately gets a translation round along the step it
    just took. Returns the number of operator rounds each row consumed. On
    :class:`BudgetExceeded` the arrays keep whatever progress was made.
    """
    rounds = np.zeros(X.shape[0], dtype=int)
    for op in ("expand", "rotate", "axesion"):
        before = X.copy()
        improved = sample_rows(op, X, F, params, spec, rng, budget)
        rounds += 1
        moved = improved & np.any(X != before, axis=1)
        if np.any(moved):
            Xm, Fm = X[moved], F[moved]
            sample_rows("translate", Xm, Fm, params, spec, rng, budget, X_prev=before[moved])
            X[moved] = Xm
            F[moved] = Fm
            rounds[moved] += 1
    return rounds


def sta_step(agent: Agent, params: StaParams, spec: ProblemSpec, rng: np.random.Generator,
             budget: Optional[EvalBudget] = None) -> Agent:
    """One basic STA iteration on a single agent; never worsens its fitness."""
    X = np.asarray(agent.x, dtype=float)[None, :].copy()
    F = np.array([agent.fitness], dtype=float)
    try:
        step_rows(X, F, params, spec, rng, budget)
    except BudgetExceeded as exc:
        exc.best = Agent(X[0], float(F[0]))
        raise
    return Agent(X[0], float(F[0]))


def decay_alpha(params: StaParams) -> StaParams:
    """Divide alpha by the decay base, restoring alpha_max once below alpha_min."""
    alpha = params.alpha / params.decay_base
    if alpha < params.alpha_min:
        alpha = params.alpha_max
    return replace(params, alpha=alpha)


def alpha_period(params: StaParams) -> int:
    """Number of decays after which the alpha schedule returns to alpha_max."""
    # count of j >= 0 with alpha_max * base**-j >= alpha_min, guarded against log rounding
    j = math.floor(math.log(params.alpha_max / params.alpha_min, params.decay_base))
    while params.alpha_max / params.decay_base ** (j + 1) >= params.alpha_min:
        j += 1
    while j > 0 and params.alpha_max / params.decay_base ** j < params.alpha_min:
        j -= 1
    return j + 1
