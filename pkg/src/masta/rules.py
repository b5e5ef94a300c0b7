"""Multiagent update rules and the communication operation.

Every follower is pulled toward (or pushed through) the leader, the incumbent
best agent. The pure rules below are vectorized over leading axes; rates
broadcast against the trailing dimension axis.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .objective import Agent, EvalBudget, ProblemSpec, evaluate_batch

RATE_KINDS = ("fixed", "varying-linear", "stochastic-uniform", "stochastic-gaussian")


@dataclass(frozen=True)
class RatePolicy:
    """How the rate of convergence is chosen at each communication step."""

    kind: str = "stochastic-uniform"
    eta: float = -0.5
    eta_start: float = -0.9
    eta_end: float = -0.1
    interval: tuple[float, float] = (-2.0, 2.0)
    L: int = 1
    elementwise: bool = False

    def __post_init__(self):
        object.__setattr__(self, "interval", tuple(float(v) for v in self.interval))
        if self.kind not in RATE_KINDS:
            raise ValueError(f"unknown rate kind {self.kind!r}; expected one of {RATE_KINDS}")
        if self.kind == "fixed" and not abs(self.eta) < 1:
            raise ValueError("a fixed rate needs |eta| < 1")
        if self.kind == "varying-linear" and not (abs(self.eta_start) < 1 and abs(self.eta_end) < 1):
            raise ValueError("a varying rate needs |eta_start| < 1 and |eta_end| < 1")
        a, b = self.interval
        if not a < b:
            raise ValueError("rate interval must satisfy a < b")
        if int(self.L) != self.L or self.L < 1:
            raise ValueError("L must be a positive integer")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["interval"] = list(self.interval)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RatePolicy":
        return cls(**d)


@dataclass(frozen=True)
class CommPolicy:
    """Which candidate generators the communication operation uses.

    ``zeta_source`` selects the convex coefficients: ``"simplex"`` draws
    ``(eta, zeta)`` uniformly on the triangle ``eta, zeta >= 0, eta + zeta <= 1``;
    ``"fixed"`` uses ``convex_eta`` and ``convex_zeta``.
    """

    rate: RatePolicy = field(default_factory=RatePolicy)
    use_symmetry: bool = True
    use_convex: bool = False
    zeta_source: str = "simplex"
    convex_eta: float = 1.0 / 3.0
    convex_zeta: float = 1.0 / 3.0
    use_ma_rotation: bool = True
    ma_eta: float = 1.0
    use_rate: bool = True

    def __post_init__(self):
        if not (self.use_rate or self.use_convex or self.use_ma_rotation):
            raise ValueError("at least one update mechanism must be enabled")
        if not 0 < self.ma_eta <= 1:
            raise ValueError("ma_eta must lie in (0, 1]")
        if self.zeta_source not in ("simplex", "fixed"):
            raise ValueError("zeta_source must be 'simplex' or 'fixed'")
        if self.zeta_source == "fixed":
            _check_convex(self.convex_eta, self.convex_zeta)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["rate"] = self.rate.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CommPolicy":
        d = dict(d)
        if isinstance(d.get("rate"), dict):
            d["rate"] = RatePolicy.from_dict(d["rate"])
        return cls(**d)


def rate_step(x, best, eta):
    """``eta * x + (1 - eta) * best``."""
    return eta * np.asarray(x, dtype=float) + (1.0 - eta) * np.asarray(best, dtype=float)


def closed_form_fixed(x0, best, eta: float, k: int):
    """Position after ``k`` fixed-rate steps toward a static leader."""
    if k < 0:
        raise ValueError("k must be non-negative")
    best = np.asarray(best, dtype=float)
    return best + eta ** k * (np.asarray(x0, dtype=float) - best)


def closed_form_varying(x0, best, etas):
    """Position after applying the rates ``etas`` in turn toward a static leader."""
    best = np.asarray(best, dtype=float)
    return best + np.prod(etas) * (np.asarray(x0, dtype=float) - best)


def sample_rate(policy: RatePolicy, g: float, g_max: float, rng: np.random.Generator,
                n: Optional[int] = None, size=()):
    """Draw a rate of convergence.

    Returns a float when ``size`` is empty and the policy is scalar. With
    ``policy.elementwise`` a per-dimension vector of length ``n`` is drawn
    (shape ``size + (n,)``).
    """
    size = tuple(np.atleast_1d(size)) if size != () else ()
    shape = size
    if policy.elementwise:
        if n is None:
            raise ValueError("elementwise rates need the dimension n")
        shape = size + (n,)
    if policy.kind == "fixed":
        out = np.full(shape, float(policy.eta))
    elif policy.kind == "varying-linear":
        if g > g_max:
            raise ValueError(f"generation {g} is beyond the schedule horizon {g_max}")
        eta = policy.eta_start + (policy.eta_end - policy.eta_start) * g / g_max
        out = np.full(shape, float(eta))
    else:
        a, b = policy.interval
        out = np.ones(shape)
        for _ in range(policy.L):
            if policy.kind == "stochastic-uniform":
                out = out * rng.uniform(a, b, size=shape)
            else:
                out = out * _truncated_normal(a, b, shape, rng)
    if shape == ():
        return float(out)
    return out


def _truncated_normal(a, b, shape, rng):
    out = rng.standard_normal(shape)
    bad = (out <= a) | (out >= b)
    while np.any(bad):
        out[bad] = rng.standard_normal(int(np.count_nonzero(bad)))
        bad = (out <= a) | (out >= b)
    return out


def symmetry(x_next, best):
    """Reflection through the leader: ``2 * best - x_next``."""
    return 2.0 * np.asarray(best, dtype=float) - np.asarray(x_next, dtype=float)


def _check_convex(eta, zeta):
    eta, zeta = np.asarray(eta), np.asarray(zeta)
    if np.any(eta < 0) or np.any(zeta < 0) or np.any(eta + zeta > 1):
        raise ValueError("convex coefficients need eta >= 0, zeta >= 0 and eta + zeta <= 1")


def convex_step(x_i, x_j, best, eta, zeta):
    """``eta * x_i + zeta * x_j + (1 - eta - zeta) * best``, a point of the triangle."""
    _check_convex(eta, zeta)
    return (eta * np.asarray(x_i, dtype=float) + zeta * np.asarray(x_j, dtype=float)
            + (1.0 - eta - zeta) * np.asarray(best, dtype=float))


def elementwise_step(x_i, best, etas, x_j=None, zetas=None):
    """Per-dimension rates: ``best + etas * (x_i - best) [+ zetas * (x_j - best)]``."""
    x_i = np.asarray(x_i, dtype=float)
    best = np.asarray(best, dtype=float)
    etas = np.asarray(etas, dtype=float)
    n = x_i.shape[-1]
    if etas.shape[-1:] != (n,):
        raise ValueError(f"etas must have trailing length {n}")
    if x_j is None:
        # same expression as rate_step so constant rates agree bit for bit
        return etas * x_i + (1.0 - etas) * best
    if zetas is None:
        raise ValueError("zetas are required together with x_j")
    zetas = np.asarray(zetas, dtype=float)
    if zetas.shape[-1:] != (n,):
        raise ValueError(f"zetas must have trailing length {n}")
    x_j = np.asarray(x_j, dtype=float)
    return best + etas * (x_i - best) + zetas * (x_j - best)


def ma_rotate(x, best, eta: float, rng: np.random.Generator):
    """Contracting rotation about the leader.

    ``best + eta * R/|R|_2 * (x - best)`` with ``R`` uniform on (-1, 1)^(n*n)
    and ``|R|_2`` its spectral norm, so the result lies within
    ``eta * |x - best|`` of ``best``.
    """
    if not 0 < eta <= 1:
        raise ValueError("eta must lie in (0, 1]")
    x = np.asarray(x, dtype=float)
    best = np.asarray(best, dtype=float)
    d = x - best
    n = d.shape[-1]
    R = rng.uniform(-1.0, 1.0, size=d.shape + (n,))
    if n == 1:
        # R/|R| is exactly the sign of the draw
        return best + eta * np.where(R[..., 0] < 0, -1.0, 1.0) * d
    norm = np.linalg.norm(R, ord=2, axis=(-2, -1))
    norm = np.where(norm == 0.0, 1.0, norm)
    step = np.einsum("...ij,...j->...i", R, d) / norm[..., None]
    return best + eta * step


def sample_convex_coefficients(policy: CommPolicy, rng: np.random.Generator, size):
    """Convex weights ``(eta, zeta)`` drawn per ``policy.zeta_source``."""
    if policy.zeta_source == "fixed":
        return np.full(size, policy.convex_eta), np.full(size, policy.convex_zeta)
    u = rng.uniform(0.0, 1.0, size=size)
    v = rng.uniform(0.0, 1.0, size=size)
    flip = u + v > 1.0
    u = np.where(flip, 1.0 - u, u)
    v = np.where(flip, 1.0 - v, v)
    return u, v


def _random_partners(m: int, rng):
    # index j != i among m agents
    j = rng.integers(0, m - 1, size=m)
    return j + (j >= np.arange(m))


def communicate_rows(X: np.ndarray, F: np.ndarray, best_idx: int, policy: CommPolicy,
                     spec: ProblemSpec, rng: np.random.Generator, g: float = 0, g_max: float = 1,
                     budget: Optional[EvalBudget] = None) -> np.ndarray:
    """Communication round on a population held as arrays, in place.

    Each follower gets its enabled candidates (rate step, its mirror image,
    a convex combination with a random peer, a contracting rotation); all
    are clipped, evaluated, and the follower moves to the best one only if
    it is strictly better. The leader row is never touched. Returns the mask
    of improved rows.
    """
    N, n = X.shape
    best = X[best_idx].copy()
    followers = np.flatnonzero(np.arange(N) != best_idx)
    m = followers.size
    improved = np.zeros(N, dtype=bool)
    if m == 0:
        return improved
    Xf = X[followers]
    cands = []
    elementwise = policy.rate.elementwise
    if policy.use_rate:
        eta = sample_rate(policy.rate, g, g_max, rng, n=n, size=(m,))
        if not elementwise:
            eta = eta[:, None]
        y = rate_step(Xf, best, eta)
        cands.append(y)
        if policy.use_symmetry:
            cands.append(symmetry(y, best))
    if policy.use_convex:
        j = _random_partners(N, rng)[followers]
        shape = (m, n) if elementwise else (m, 1)
        ce, cz = sample_convex_coefficients(policy, rng, shape)
        if elementwise:
            y = elementwise_step(Xf, best, ce, X[j], cz)
        else:
            y = convex_step(Xf, X[j], best, ce, cz)
        cands.append(y)
    if policy.use_ma_rotation:
        cands.append(ma_rotate(Xf, best, policy.ma_eta, rng))
    C = spec.clip(np.stack(cands, axis=1))
    k = C.shape[1]
    fc = evaluate_batch(spec, C.reshape(m * k, n), budget).reshape(m, k)
    pick = np.argmin(fc, axis=1)
    fbest = fc[np.arange(m), pick]
    better = fbest < F[followers]
    rows = followers[better]
    X[rows] = C[better, pick[better]]
    F[rows] = fbest[better]
    improved[rows] = True
    return improved


def communicate(population, best, policy: CommPolicy, spec: ProblemSpec,
                rng: np.random.Generator, budget: Optional[EvalBudget] = None,
                g: float = 0, g_max: float = 1):
    """Apply one communication round to a list of agents.

    ``best`` must be the minimum-fitness member of ``population`` (matched by
    identity first, then by position and fitness). Returns a new list.
    """
    X = np.array([a.x for a in population], dtype=float)
    F = np.array([a.fitness for a in population], dtype=float)
    idx = next((i for i, a in enumerate(population) if a is best), None)
    if idx is None:
        matches = [i for i, a in enumerate(population)
                   if a.fitness == best.fitness and np.array_equal(a.x, best.x)]
        if not matches:
            raise ValueError("best must be a member of the population")
        idx = matches[0]
    if F[idx] > F.min():
        raise ValueError("best is not the minimum-fitness agent")
    communicate_rows(X, F, idx, policy, spec, rng, g, g_max, budget)
    return [Agent(x, float(f)) for x, f in zip(X, F)]
