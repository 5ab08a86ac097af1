"""Projected-gradient solver for the relaxed resampling QP over the capped simplex."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from graphsimp.objective import SimplificationProblem, gradient, hessian_apply, total_loss


@dataclass(frozen=True)
class SolverConfig:
    """Projected gradient settings.

    ``kkt_tol=None`` means 1e-6 * (1 + max f); ``initial_step=None`` means 1/L
    with L the power-iteration estimate of the Hessian norm.
    """

    max_iters: int = 500
    kkt_tol: float | None = None
    initial_step: float | None = None
    shrink: float = 0.5
    sufficient_decrease: float = 1e-4
    power_iters: int = 20
    barzilai_borwein: bool = True

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        if self.kkt_tol is not None and not self.kkt_tol > 0:
            raise ValueError("kkt_tol must be positive")
        if not 0.0 < self.shrink < 1.0:
            raise ValueError("shrink must lie in (0, 1)")
        if not 0.0 < self.sufficient_decrease <= 0.5:
            raise ValueError("sufficient_decrease must lie in (0, 0.5]")


@dataclass
class ResampleSolution:
    psi: np.ndarray
    kept: np.ndarray
    objective_trace: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    kkt_residual: float = math.inf


def project_capped_simplex(v, budget: float) -> np.ndarray:
    """Euclidean projection of ``v`` onto {p : 0 <= p <= 1, sum(p) = budget}.

    The projection has the form clip(v - tau, 0, 1); tau is bracketed by
    bisection and then solved exactly on the identified free set.
    """
    v = np.asarray(v, dtype=np.float64)
    n = v.size
    if not 0.0 <= budget <= n:
        raise ValueError(f"budget {budget} outside the feasible range [0, {n}]")
    if budget == 0.0:
        return np.zeros(n)
    if budget == n:
        return np.ones(n)
    tol = 1e-10 * max(n, 1)

    lo, hi = float(v.min()) - 1.0, float(v.max())  # sum(lo) = n, sum(hi) = 0
    p = None
    for _ in range(200):
        tau = 0.5 * (lo + hi)
        p = np.clip(v - tau, 0.0, 1.0)
        s = p.sum()
        if abs(s - budget) <= tol * 1e-2:
            break
        if s > budget:
            lo = tau
        else:
            hi = tau
        if hi - lo <= 1e-15 * (1.0 + abs(tau)):
            break

    # exact shift on the free set of the bracketed pattern
    shifted = v - tau
    free = (shifted > 0.0) & (shifted < 1.0)
    n_free = int(free.sum())
    if n_free:
        n_ones = int((shifted >= 1.0).sum())
        tau_exact = (v[free].sum() - (budget - n_ones)) / n_free
        q = np.clip(v - tau_exact, 0.0, 1.0)
        if abs(q.sum() - budget) <= abs(p.sum() - budget):
            p = q
    return p


def _lipschitz_estimate(problem: SimplificationProblem, iters: int) -> float:
    n = problem.n
    x = 1.0 + np.arange(n, dtype=np.float64) / max(n, 1)
    x /= np.linalg.norm(x)
    est = 0.0
    for _ in range(max(iters, 1)):
        y = hessian_apply(problem, x)
        est = float(np.linalg.norm(y))
        if est == 0.0:
            return 0.0
        x = y / est
    return est


def select_top(psi, budget: int, f=None) -> np.ndarray:
    """Indices of the ``budget`` largest confidences, ascending.

    Ties go to the larger feature value, then to the smaller index.
    """
    psi = np.asarray(psi, dtype=np.float64)
    n = psi.size
    if not 0 <= budget <= n:
        raise ValueError(f"budget {budget} outside [0, {n}]")
    f = np.zeros(n) if f is None else np.asarray(f, dtype=np.float64)
    order = np.lexsort((np.arange(n), -f, -psi))
    return np.sort(order[:budget])


def solve_relaxed(
    problem: SimplificationProblem,
    budget: float,
    config: SolverConfig | None = None,
    warm_start=None,
) -> ResampleSolution:
    """Minimize the total loss over {0 <= psi <= 1, sum(psi) = budget}.

    Projected gradient with Armijo backtracking along the projection arc;
    trial steps follow Barzilai-Borwein after the first iteration.
    """
    config = config or SolverConfig()
    n = problem.n
    if not 0.0 <= budget <= n:
        raise ValueError(f"budget {budget} outside [0, {n}]")
    m = int(math.floor(budget + 0.5))
    tol = config.kkt_tol if config.kkt_tol is not None else 1e-6 * (1.0 + float(problem.f.max(initial=0.0)))

    if warm_start is None:
        psi = np.full(n, budget / n) if n else np.zeros(0)
    else:
        psi = project_capped_simplex(warm_start, budget)

    loss = total_loss(problem, psi)
    if not math.isfinite(loss):
        raise FloatingPointError("non-finite objective at the initial iterate")
    trace = [loss]

    lip = _lipschitz_estimate(problem, config.power_iters)
    if lip == 0.0 or budget in (0.0, float(n)):
        # objective constant on the feasible set, or the set is a single point
        return ResampleSolution(psi, select_top(psi, m, problem.f), trace, 0, True, 0.0)
    s_ref = 1.0 / lip
    step = config.initial_step if config.initial_step is not None else s_ref

    g = gradient(problem, psi)
    residual = math.inf
    for it in range(1, config.max_iters + 1):
        residual = float(np.linalg.norm(psi - project_capped_simplex(psi - s_ref * g, budget))) / s_ref
        if residual <= tol:
            break
        t = step
        while True:
            cand = project_capped_simplex(psi - t * g, budget)
            d = cand - psi
            cand_loss = total_loss(problem, cand)
            if not math.isfinite(cand_loss):
                raise FloatingPointError(f"non-finite objective at iterate {it}")
            if cand_loss <= loss + config.sufficient_decrease * float(np.dot(g, d)):
                break
            t *= config.shrink
            if t < 1e-12 * s_ref:
                cand = None
                break
        if cand is None or not np.any(d):
            break  # no representable descent left
        g_new = gradient(problem, cand)
        if config.barzilai_borwein:
            y = g_new - g
            sy = float(np.dot(d, y))
            step = float(np.dot(d, d)) / sy if sy > 0 else s_ref
            step = min(max(step, s_ref), 1e6 * s_ref)
        psi, g, loss = cand, g_new, cand_loss
        trace.append(cand_loss)
    else:
        residual = float(np.linalg.norm(psi - project_capped_simplex(psi - s_ref * g, budget))) / s_ref

    return ResampleSolution(psi, select_top(psi, m, problem.f), trace, len(trace) - 1, residual <= tol, residual)
