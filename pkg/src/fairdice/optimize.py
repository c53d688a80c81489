"""Box-constrained welfare maximisation via projected quasi-Newton ascent.

Wraps L-BFGS-B around a maximisation objective with forward
finite-difference gradients (optionally evaluated as one batched call), an
accepted-iterate history for monotonicity checks, seeded restarts and a KKT
residual on the returned point.  The objective is normalised by its value
at the initial guess so tolerances are problem-scale free.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import minimize


@dataclass(frozen=True)
class OptimizerConfig:
    max_iterations: int = 600
    gradient_tolerance: float = 1e-6  # projected-gradient inf-norm, normalised objective
    finite_difference_step: float = 1e-6  # relative forward step
    restarts: int = 0  # additional seeded starts beyond the supplied guess
    seed: int = 0


@dataclass
class OptimResult:
    x: np.ndarray
    welfare: float
    iterations: int
    converged: bool
    projected_gradient_norm: float
    kkt_residual: float
    history: list = field(default_factory=list)  # objective at accepted iterates
    message: str = ""


def _fd_steps(x: np.ndarray, lo: np.ndarray, hi: np.ndarray, rel: float) -> np.ndarray:
    """Sign-aware forward steps: step backward where the box would be crossed."""
    h = rel * np.maximum(np.abs(x), 1.0)
    h = np.where(x + h > hi, -h, h)
    return h


def finite_difference_gradient(
    objective: Callable[[np.ndarray], float],
    x: np.ndarray,
    lo: np.ndarray,
    hi: np.ndarray,
    rel_step: float,
    f0: float | None = None,
    batch_objective: Callable[[np.ndarray], np.ndarray] | None = None,
) -> np.ndarray:
    """Forward finite-difference gradient; fixed coordinates (lo == hi) get 0.

    With ``batch_objective`` all perturbed points are evaluated in a single
    call of shape (m, n) -> (m,).
    """
    x = np.asarray(x, dtype=float)
    if f0 is None:
        f0 = float(objective(x))
    free = hi > lo
    h = _fd_steps(x, lo, hi, rel_step)
    grad = np.zeros_like(x)
    idx = np.nonzero(free)[0]
    if len(idx) == 0:
        return grad
    if batch_objective is not None:
        pts = np.repeat(x[None, :], len(idx), axis=0)
        pts[np.arange(len(idx)), idx] += h[idx]
        vals = np.asarray(batch_objective(pts), dtype=float)
    else:
        vals = np.array([objective(x + h[i] * _unit(len(x), i)) for i in idx])
    grad[idx] = (vals - f0) / h[idx]
    return grad


def _unit(n: int, i: int) -> np.ndarray:
    e = np.zeros(n)
    e[i] = 1.0
    return e


def kkt_residual(x: np.ndarray, grad: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> float:
    """Max violation of the first-order conditions for max f over the box.

    Interior coordinates require |g| ~ 0; at a lower bound the ascent
    direction must point outward (g <= 0), at an upper bound g >= 0.
    """
    bound_tol = 1e-9 * np.maximum(1.0, np.abs(hi - lo))
    at_lo = x <= lo + bound_tol
    at_hi = x >= hi - bound_tol
    fixed = hi <= lo + bound_tol
    res = np.abs(grad)
    res = np.where(at_lo, np.maximum(grad, 0.0), res)
    res = np.where(at_hi, np.maximum(-grad, 0.0), res)
    res = np.where(at_hi & at_lo, np.where(fixed, 0.0, res), res)
    return float(np.max(res)) if len(res) else 0.0


def projected_gradient_norm(
    x: np.ndarray, grad: np.ndarray, lo: np.ndarray, hi: np.ndarray
) -> float:
    """Inf-norm of the gradient projected onto the feasible directions."""
    step = np.clip(x + grad, lo, hi) - x
    return float(np.max(np.abs(step))) if len(step) else 0.0


def optimize(
    objective: Callable[[np.ndarray], float],
    bounds: tuple[np.ndarray, np.ndarray],
    initial_guess: np.ndarray,
    config: OptimizerConfig = OptimizerConfig(),
    *,
    batch_objective: Callable[[np.ndarray], np.ndarray] | None = None,
    gradient: Callable[[np.ndarray], np.ndarray] | None = None,
) -> OptimResult:
    """Maximise ``objective`` over a box, deterministically for a given config.

    Parameters
    ----------
    bounds : (lo, hi)
        Coordinate-wise box; lo == hi pins a coordinate.
    batch_objective : callable, optional
        Vectorised evaluation used to amortise finite differences.
    gradient : callable, optional
        Exact gradient hook; replaces finite differences when given.

    The best accepted iterate across all restarts is returned and is never
    worse than the initial guess.
    """
    lo = np.asarray(bounds[0], dtype=float)
    hi = np.asarray(bounds[1], dtype=float)
    x0 = np.clip(np.asarray(initial_guess, dtype=float), lo, hi)
    if np.any(lo > hi):
        raise ValueError("lower bounds exceed upper bounds")

    f_x0 = float(objective(x0))
    scale = max(1.0, abs(f_x0))

    def grad_max(x: np.ndarray, f_at_x: float) -> np.ndarray:
        if gradient is not None:
            return np.asarray(gradient(x), dtype=float)
        return finite_difference_gradient(
            objective, x, lo, hi, config.finite_difference_step,
            f0=f_at_x, batch_objective=batch_objective,
        )

    rng_master = np.random.default_rng(config.seed)
    best: OptimResult | None = None
    for attempt in range(config.restarts + 1):
        if attempt == 0:
            start = x0
        else:
            jitter = rng_master.uniform(-0.05, 0.05, size=x0.shape) * (hi - lo)
            start = np.clip(x0 + jitter, lo, hi)

        cache: dict[bytes, float] = {}

        def fun(x: np.ndarray) -> float:
            val = float(objective(x))
            cache[x.tobytes()] = val
            if len(cache) > 64:
                cache.pop(next(iter(cache)))
            return -val / scale

        def jac(x: np.ndarray) -> np.ndarray:
            f_at = cache.get(x.tobytes())
            if f_at is None:
                f_at = float(objective(x))
            return -grad_max(x, f_at) / scale

        history: list[float] = [float(objective(start))]

        def record(xk: np.ndarray) -> None:
            history.append(float(objective(xk)))

        res = minimize(
            fun,
            start,
            jac=jac,
            method="L-BFGS-B",
            bounds=np.column_stack([lo, hi]),
            callback=record,
            options={
                "maxiter": config.max_iterations,
                "gtol": config.gradient_tolerance,
                "ftol": 1e-16,
                "maxcor": 20,
            },
        )
        x_fin = np.clip(res.x, lo, hi)
        f_fin = float(objective(x_fin))
        g_fin = grad_max(x_fin, f_fin)
        result = OptimResult(
            x=x_fin,
            welfare=f_fin,
            iterations=int(res.nit),
            converged=bool(res.success),
            projected_gradient_norm=projected_gradient_norm(x_fin, g_fin / scale, lo, hi),
            kkt_residual=kkt_residual(x_fin, g_fin, lo, hi),
            history=history,
            message=str(res.message),
        )
        if best is None or result.welfare > best.welfare:
            best = result

    if best.welfare < f_x0:  # pragma: no cover - L-BFGS-B never regresses
        best.x, best.welfare = x0, f_x0
    return best


def default_initial_guess(
    mu_upper: np.ndarray,
    *,
    cap: float = 1.2,
    ramp_until: int = 40,
    savings: float = 0.25,
    terminal_savings: float | None = None,
    pinned_tail: int = 10,
) -> tuple[np.ndarray, np.ndarray]:
    """Feasible starting point: mu ramps to 0.9*cap by ``ramp_until``, s flat.

    The terminal savings tail is set to the steady-state value when given so
    the guess respects pinned bounds.
    """
    n = len(mu_upper)
    ramp = np.minimum(mu_upper[0] + (0.9 * cap - mu_upper[0]) * np.arange(n) / (ramp_until - 1), 0.9 * cap)
    mu = np.minimum(ramp, mu_upper)
    s = np.full(n, savings)
    if terminal_savings is not None and pinned_tail > 0:
        s[-pinned_tail:] = terminal_savings
    return mu, s
