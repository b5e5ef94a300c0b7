"""Pure rate-of-convergence iteration without STA operators.

Agents follow ``x <- rate_step(x, leader, eta)``; the leader is either a fixed
point or re-elected as the lowest-fitness agent before every step. Used to
reproduce the trajectory demonstrations of the rate policies.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .objective import ProblemSpec, evaluate_batch
from .rules import RatePolicy, rate_step, sample_rate


@dataclass
class Trace:
    X: np.ndarray            # (iters + 1, N, n) agent positions
    F: np.ndarray            # (iters + 1, N) fitness
    leader: np.ndarray       # (iters + 1, n) leader position at each iteration
    leader_idx: np.ndarray   # (iters + 1,) agent index of the leader, -1 when fixed

    def final_distances(self) -> np.ndarray:
        return np.linalg.norm(self.X[-1] - self.leader[-1], axis=1)


def run_trace(spec: ProblemSpec, policy: RatePolicy, n_agents: int, iters: int,
              rng: np.random.Generator, leader: Optional[np.ndarray] = None,
              X0: Optional[np.ndarray] = None) -> Trace:
    """Iterate the rate update for ``iters`` steps and record every position.

    Each agent draws its own rate per step for stochastic policies. A varying
    schedule runs from ``eta_start`` at step 0 to ``eta_end`` at ``iters``.
    """
    if n_agents < 1 or iters < 0:
        raise ValueError("need n_agents >= 1 and iters >= 0")
    X = rng.uniform(spec.lower, spec.upper, size=(n_agents, spec.n)) if X0 is None \
        else np.array(X0, dtype=float)
    fixed = leader is not None
    if fixed:
        leader = np.asarray(leader, dtype=float)
    Xs, Fs, Ls, Li = [], [], [], []
    for k in range(iters + 1):
        F = evaluate_batch(spec, X)
        if fixed:
            lead, li = leader, -1
        else:
            li = int(np.argmin(F))
            lead = X[li].copy()
        Xs.append(X.copy())
        Fs.append(F)
        Ls.append(lead)
        Li.append(li)
        if k == iters:
            break
        eta = sample_rate(policy, k, max(iters, 1), rng, n=spec.n, size=(n_agents,))
        if not policy.elementwise:
            eta = eta[:, None]
        nxt = rate_step(X, lead, eta)
        if not fixed:
            nxt[li] = X[li]
        X = nxt
    return Trace(np.array(Xs), np.array(Fs), np.array(Ls), np.array(Li))


def write_trace_csv(path, trace: Trace) -> None:
    n = trace.X.shape[2]
    coords = [f"x{d + 1}" for d in range(n)]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iteration", "agent"] + coords + ["f", "is_leader"])
        for k in range(trace.X.shape[0]):
            if trace.leader_idx[k] < 0:
                w.writerow([k, "leader"] + [repr(float(v)) for v in trace.leader[k]] + ["", 1])
            for i in range(trace.X.shape[1]):
                w.writerow([k, i] + [repr(float(v)) for v in trace.X[k, i]]
                           + [repr(float(trace.F[k, i])), int(i == trace.leader_idx[k])])
