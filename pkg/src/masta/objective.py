"""Box-bounded problems with a benchmark registry, plus evaluation accounting.

Every objective is stored in batched form: it maps an ``(m, n)`` array of
points to an ``(m,)`` array of values. Single points go through the same
path so scalar and batched evaluations agree bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

BatchFunc = Callable[[np.ndarray], np.ndarray]


class BudgetExceeded(Exception):
    """Raised when an evaluation request would overrun the evaluation cap.

    ``best`` carries the best agent known to the raiser (may be ``None``).
    """

    def __init__(self, used: int, requested: int, cap: int, best=None):
        super().__init__(
            f"evaluation budget exceeded: {used} used + {requested} requested > cap {cap}"
        )
        self.used = used
        self.requested = requested
        self.cap = cap
        self.best = best


@dataclass
class EvalBudget:
    """Running tally of objective evaluations with an optional hard cap."""

    used: int = 0
    cap: Optional[int] = None

    def charge(self, k: int) -> None:
        if self.cap is not None and self.used + k > self.cap:
            raise BudgetExceeded(self.used, k, self.cap)
        self.used += k

    @property
    def remaining(self) -> Optional[int]:
        return None if self.cap is None else self.cap - self.used


@dataclass
class Agent:
    """A decision vector together with its cached objective value."""

    x: np.ndarray
    fitness: float

    def copy(self) -> "Agent":
        return Agent(self.x.copy(), self.fitness)


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """A box-bounded minimization problem.

    Args:
        name: identifier used in reports and the benchmark registry.
        n: dimension.
        lower, upper: per-dimension bounds, arrays of length ``n``.
        func: batched objective, ``(m, n) -> (m,)``.
        f_min: known optimal value, if any.
        x_star: known minimizer, if any.
    """

    name: str
    n: int
    lower: np.ndarray
    upper: np.ndarray
    func: BatchFunc = field(repr=False)
    f_min: Optional[float] = None
    x_star: Optional[np.ndarray] = None

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"dimension must be a positive integer, got {self.n!r}")
        lower = np.broadcast_to(np.asarray(self.lower, dtype=float), (self.n,)).copy()
        upper = np.broadcast_to(np.asarray(self.upper, dtype=float), (self.n,)).copy()
        if not np.all(lower < upper):
            raise ValueError("every lower bound must be strictly below its upper bound")
        lower.flags.writeable = False
        upper.flags.writeable = False
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        if self.x_star is not None:
            xs = np.asarray(self.x_star, dtype=float).copy()
            if xs.shape != (self.n,):
                raise ValueError(f"x_star must have length {self.n}")
            xs.flags.writeable = False
            object.__setattr__(self, "x_star", xs)

    @classmethod
    def from_scalar(cls, name: str, func: Callable[[np.ndarray], float], lower, upper,
                    n: Optional[int] = None, **kwargs) -> "ProblemSpec":
        """Build a spec from a function of a single 1-D point."""
        if n is None:
            n = np.size(lower)

        def batched(X: np.ndarray) -> np.ndarray:
            return np.array([float(func(row)) for row in X], dtype=float)

        return cls(name=name, n=n, lower=lower, upper=upper, func=batched, **kwargs)

    def clip(self, X: np.ndarray, out: bool = False) -> np.ndarray:
        """Project points onto the box; ``out=True`` overwrites ``X``."""
        target = X if out else None
        X = np.maximum(X, self.lower, out=target)
        return np.minimum(X, self.upper, out=X)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "n": self.n,
            "lower": self.lower.tolist(),
            "upper": self.upper.tolist(),
            "f_min": self.f_min,
            "x_star": None if self.x_star is None else self.x_star.tolist(),
        }


def evaluate_batch(spec: ProblemSpec, X, budget: Optional[EvalBudget] = None) -> np.ndarray:
    """Evaluate every row of ``X``; charges ``len(X)`` evaluations to ``budget``."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != spec.n:
        raise ValueError(f"expected points of shape (m, {spec.n}), got {X.shape}")
    if budget is not None:
        budget.charge(X.shape[0])
    return np.asarray(spec.func(X), dtype=float)


def evaluate(spec: ProblemSpec, x, budget: Optional[EvalBudget] = None) -> float:
    """Objective value at a single point; charges one evaluation to ``budget``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (spec.n,):
        raise ValueError(f"point has shape {x.shape}, problem dimension is {spec.n}")
    return float(evaluate_batch(spec, x[None, :], budget)[0])


# --- benchmark functions (batched) -------------------------------------------

def spherical(X):
    return np.sum(X * X, axis=1)


def rastrigin(X):
    return np.sum(X * X - 10.0 * np.cos(2.0 * np.pi * X) + 10.0, axis=1)


def griewank(X):
    i = np.arange(1, X.shape[1] + 1)
    return np.sum(X * X, axis=1) / 4000.0 - np.prod(np.cos(X / np.sqrt(i)), axis=1) + 1.0


def rosenbrock(X):
    head, tail = X[:, :-1], X[:, 1:]
    return np.sum(100.0 * (tail - head * head) ** 2 + (head - 1.0) ** 2, axis=1)


def ackley(X):
    n = X.shape[1]
    root_mean_sq = np.sqrt(np.sum(X * X, axis=1) / n)
    mean_cos = np.sum(np.cos(2.0 * np.pi * X), axis=1) / n
    return 20.0 + np.e - 20.0 * np.exp(-0.2 * root_mean_sq) - np.exp(mean_cos)


def schaffer(X):
    r2 = X[:, 0] ** 2 + X[:, 1] ** 2
    return 0.5 + (np.sin(np.sqrt(r2)) ** 2 - 0.5) / (1.0 + 0.001 * r2) ** 2


def easom(X):
    x1, x2 = X[:, 0], X[:, 1]
    return -np.cos(x1) * np.cos(x2) * np.exp(-((x1 - np.pi) ** 2 + (x2 - np.pi) ** 2))


def goldstein_price(X):
    x1, x2 = X[:, 0], X[:, 1]
    x11, x22, x12 = x1 * x1, x2 * x2, x1 * x2
    s = x1 + x2 + 1.0
    d = 2.0 * x1 - 3.0 * x2
    a = 1.0 + s * s * (19.0 - 14.0 * x1 + 3.0 * x11 - 14.0 * x2 + 6.0 * x12 + 3.0 * x22)
    b = 30.0 + d * d * (18.0 - 32.0 * x1 + 12.0 * x11 + 48.0 * x2 - 36.0 * x12 + 27.0 * x22)
    return a * b


def paper_example(X):
    x1, x2 = X[:, 0], X[:, 1]
    return (x1 - 1.0) ** 2 + (x2 - 2.0 * x1 ** 2) ** 2


@dataclass(frozen=True)
class _Entry:
    func: BatchFunc
    bound: float
    f_min: float
    x_star: Callable[[int], np.ndarray]
    fixed_dim: Optional[int] = None
    min_dim: int = 1


BENCHMARKS: dict[str, _Entry] = {
    "spherical": _Entry(spherical, 100.0, 0.0, np.zeros),
    "rastrigin": _Entry(rastrigin, 5.12, 0.0, np.zeros),
    "griewank": _Entry(griewank, 600.0, 0.0, np.zeros),
    "rosenbrock": _Entry(rosenbrock, 30.0, 0.0, np.ones, min_dim=2),
    "ackley": _Entry(ackley, 32.0, 0.0, np.zeros),
    "schaffer": _Entry(schaffer, 100.0, 0.0, np.zeros, fixed_dim=2),
    "easom": _Entry(easom, 100.0, -1.0, lambda n: np.full(n, np.pi), fixed_dim=2),
    "goldstein-price": _Entry(goldstein_price, 2.0, 3.0, lambda n: np.array([0.0, -1.0]),
                              fixed_dim=2),
    "paper-example": _Entry(paper_example, 5.0, 0.0, lambda n: np.array([1.0, 2.0]),
                            fixed_dim=2),
}


def make_benchmark(name: str, n: int) -> ProblemSpec:
    """Look up a built-in benchmark by name and instantiate it in ``n`` dimensions."""
    try:
        entry = BENCHMARKS[name]
    except KeyError:
        raise ValueError(
            f"unknown benchmark {name!r}; choose from {', '.join(BENCHMARKS)}") from None
    if entry.fixed_dim is not None and n != entry.fixed_dim:
        raise ValueError(f"{name} is only defined for n={entry.fixed_dim}, got n={n}")
    if n < entry.min_dim:
        raise ValueError(f"{name} needs n >= {entry.min_dim}, got n={n}")
    return ProblemSpec(
        name=name, n=n, lower=np.full(n, -entry.bound), upper=np.full(n, entry.bound),
        func=entry.func, f_min=entry.f_min, x_star=entry.x_star(n),
    )


def init_population(spec: ProblemSpec, N: int, rng: np.random.Generator,
                    budget: Optional[EvalBudget] = None) -> list[Agent]:
    """Sample ``N`` agents uniformly in the box and evaluate them."""
    X, F = _init_arrays(spec, N, rng, budget)
    return [Agent(x, float(f)) for x, f in zip(X, F)]


def _init_arrays(spec, N, rng, budget=None):
    if N < 1:
        raise ValueError("population size must be at least 1")
    X = rng.uniform(spec.lower, spec.upper, size=(N, spec.n))
    return X, evaluate_batch(spec, X, budget)
