"""Boundary feedback law and tuning of the target decay constant lambda."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect

from .kernels import GammaKernel, solve_gamma
from .params import EffectiveParams, Grid
from .transforms import FlowState, physical_to_state


@dataclass(frozen=True)
class ControlSignal:
    U: float
    mu_physical: float
    t: float


def control_weights(g: GammaKernel, grid: Grid) -> tuple[float, np.ndarray]:
    """gamma(1) and the left-rectangle weights dx gamma(1 - x_i)/D, i < N."""
    x = grid.x[:-1]
    return float(g(1.0)), g(1.0 - x) * (grid.dx / g.ep.D)


def control_value(u: np.ndarray, X: float, gamma1: float, weights: np.ndarray) -> float:
    # u[N] is excluded so the law stays explicit.
    return gamma1 * X + float(weights @ u[:-1])


def control_law(s: FlowState, g: GammaKernel, grid: Grid) -> ControlSignal:
    """U = gamma(1) X + int_0^1 k(1, y) u(y) dy, left-rectangle rule."""
    if s.u.size != grid.N + 1:
        raise ValueError(f"state has {s.u.size} nodes but grid expects {grid.N + 1}")
    gamma1, weights = control_weights(g, grid)
    U = control_value(s.u, s.X, gamma1, weights)
    return ControlSignal(U=U, mu_physical=U * np.exp(g.ep.exponent_rate), t=s.t)


@dataclass
class TuningResult:
    """Outcome of the lambda search.

    ``residual`` is U_lambda(0) - u0[N] at the returned ``lam``; ``bracketed``
    is False when the scan saw no sign change, in which case ``lam`` is merely
    the scan minimizer.
    """

    lam: float
    residual: float
    bracketed: bool
    lambdas: np.ndarray
    residuals: np.ndarray

    @property
    def abs_residual(self) -> float:
        return abs(self.residual)


def compatibility_residual(
    ep: EffectiveParams, grid: Grid, s0: FlowState, lam: float, form: str = "consistent"
) -> float:
    g = solve_gamma(ep, lam, form)
    return control_law(s0, g, grid).U - s0.u[-1]


def tune_lambda(
    ep: EffectiveParams,
    grid: Grid,
    initial,
    lambda_min: float = 1e-4,
    lambda_max: float = 10.0,
    steps: int = 200,
    tol: float = 1e-15,
    form: str = "consistent",
) -> TuningResult:
    """Pick lambda so that the control at t = 0 equals the initial boundary value.

    ``initial`` is a FlowState or a physical profile accepted by
    :func:`physical_to_state`.  The residual is scanned on a log-spaced grid;
    every sign change is refined by bisection and the smallest |residual| wins
    (ties go to the smaller lambda).
    """
    if not (0.0 < lambda_min < lambda_max):
        raise ValueError("need 0 < lambda_min < lambda_max")
    if steps < 2:
        raise ValueError("steps must be at least 2")
    s0 = initial if isinstance(initial, FlowState) else physical_to_state(initial, ep, grid)

    def residual(lam: float) -> float:
        return compatibility_residual(ep, grid, s0, lam, form)

    lambdas = np.logspace(np.log10(lambda_min), np.log10(lambda_max), steps)
    residuals = np.array([residual(lam) for lam in lambdas])

    i = int(np.argmin(np.abs(residuals)))
    best_lam, best_res = float(lambdas[i]), float(residuals[i])
    bracketed = False
    for j in range(steps - 1):
        r0, r1 = residuals[j], residuals[j + 1]
        if r0 == 0.0:
            cand = float(lambdas[j])
        elif np.sign(r0) != np.sign(r1) and r1 != 0.0:
            cand = bisect(
                residual, lambdas[j], lambdas[j + 1], xtol=tol, rtol=4 * np.finfo(float).eps
            )
        else:
            continue
        bracketed = True
        res = residual(cand)
        if abs(res) < abs(best_res) or (abs(res) == abs(best_res) and cand < best_lam):
            best_lam, best_res = cand, res
    return TuningResult(
        lam=best_lam, residual=best_res, bracketed=bracketed, lambdas=lambdas, residuals=residuals
    )
