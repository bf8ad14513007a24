"""Grid-level maps between the physical flow, the gauge-scaled plant state
and the backstepping target state."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import solve_triangular

from .kernels import DeltaKernel, GammaKernel, Kernel
from .params import EffectiveParams, Grid

BOUNDARY_ATOL = 1e-10


@dataclass(frozen=True)
class FlowState:
    """Gauge-scaled flow ``u`` on the flipped unit grid and the ODE state ``X``.

    ``X`` equals B v(0, t), so that u[0] = (b/B) X.
    """

    u: np.ndarray
    X: float
    t: float = 0.0

    def __post_init__(self) -> None:
        u = np.asarray(self.u, dtype=float)
        if u.ndim != 1:
            raise ValueError("u must be one-dimensional")
        if not (np.all(np.isfinite(u)) and np.isfinite(self.X)):
            raise ValueError("state contains non-finite values")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "X", float(self.X))
        object.__setattr__(self, "t", float(self.t))

    def boundary_defect(self, ep: EffectiveParams) -> float:
        return abs(self.u[0] - ep.boundary_gain * self.X)

    def is_compatible(self, ep: EffectiveParams, atol: float = BOUNDARY_ATOL) -> bool:
        return self.boundary_defect(ep) <= atol


@dataclass(frozen=True)
class TargetState:
    w: np.ndarray
    X: float
    t: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "w", np.asarray(self.w, dtype=float))
        object.__setattr__(self, "X", float(self.X))


def physical_coordinates(grid: Grid, L: float) -> np.ndarray:
    """Physical abscissae of the flipped grid nodes, x_phys = L (1 - x)."""
    return L * (1.0 - grid.x)


def gauge(ep: EffectiveParams, grid: Grid) -> np.ndarray:
    """exp(exponent_rate x) on the grid, the factor with q = gauge * u."""
    return np.exp(ep.exponent_rate * grid.x)


def physical_to_state(
    q_profile: Callable[[np.ndarray], np.ndarray] | np.ndarray,
    ep: EffectiveParams,
    grid: Grid,
    t: float = 0.0,
) -> FlowState:
    """Sample a physical flow deviation q(x_phys) on [0, L] and gauge-scale it.

    ``q_profile`` is either a vectorized callable of the physical coordinate or
    an array of values at ascending physical nodes j L/N.
    """
    if callable(q_profile):
        q = np.asarray(q_profile(physical_coordinates(grid, ep.L)), dtype=float)
        q = np.broadcast_to(q, (grid.N + 1,)).astype(float)
    else:
        q = np.asarray(q_profile, dtype=float)[::-1]
        if q.shape != (grid.N + 1,):
            raise ValueError(f"expected {grid.N + 1} profile values, got {q.shape}")
    if not np.all(np.isfinite(q)):
        raise ValueError("initial profile has non-finite values")
    u = q / gauge(ep, grid)
    return FlowState(u=u, X=u[0] / ep.boundary_gain, t=t)


def state_to_physical(s: FlowState, ep: EffectiveParams, grid: Grid) -> np.ndarray:
    """q at ascending physical nodes j L/N (physical x = 0 first)."""
    return (s.u * gauge(ep, grid))[::-1]


def volterra_matrix(kernel: Kernel, grid: Grid) -> np.ndarray:
    """Left-rectangle discretization of f -> int_0^x kernel(x, y) f(y) dy.

    Row i holds dx * kernel(x_i, x_j) for j < i; the diagonal and upper
    triangle are zero so row i never touches f[i].
    """
    n = grid.N + 1
    lag = np.subtract.outer(np.arange(n), np.arange(n))
    values = kernel(np.clip(lag, 0, None) * grid.dx)  # kernel(0..1) on lags
    return np.where(lag > 0, values * (grid.dx / kernel.ep.D), 0.0)


def _check_grid(n: int, grid: Grid) -> None:
    if n != grid.N + 1:
        raise ValueError(f"state has {n} nodes but grid expects {grid.N + 1}")


def forward_transform(
    s: FlowState, g: GammaKernel, grid: Grid, matrix: np.ndarray | None = None
) -> TargetState:
    """w = u - gamma(x) X - int_0^x k(x, y) u(y) dy."""
    _check_grid(s.u.size, grid)
    K = volterra_matrix(g, grid) if matrix is None else matrix
    w = s.u - g(grid.x) * s.X - K @ s.u
    return TargetState(w=w, X=s.X, t=s.t)


def inverse_transform(
    ts: TargetState, d: DeltaKernel, grid: Grid, matrix: np.ndarray | None = None
) -> FlowState:
    """u = w - delta(x) X - int_0^x l(x, y) w(y) dy."""
    _check_grid(ts.w.size, grid)
    Lm = volterra_matrix(d, grid) if matrix is None else matrix
    u = ts.w - d(grid.x) * ts.X - Lm @ ts.w
    return FlowState(u=u, X=ts.X, t=ts.t)


def numerical_inverse(
    ts: TargetState, g: GammaKernel, grid: Grid, matrix: np.ndarray | None = None
) -> FlowState:
    """Invert ``forward_transform`` exactly by forward substitution.

    (I - K) u = w + gamma X with K strictly lower triangular.
    """
    _check_grid(ts.w.size, grid)
    K = volterra_matrix(g, grid) if matrix is None else matrix
    A = np.eye(grid.N + 1) - K
    u = solve_triangular(A, ts.w + g(grid.x) * ts.X, lower=True, unit_diagonal=True)
    return FlowState(u=u, X=ts.X, t=ts.t)


def weir_height_deviation(s: FlowState, ep: EffectiveParams) -> float:
    """Elevation deviation at the weir, z = X/B (gauge factor is 1 there)."""
    return s.X / ep.B


def random_compatible_state(
    ep: EffectiveParams, grid: Grid, rng: np.random.Generator, modes: int = 4
) -> FlowState:
    """Smooth random state: a few sine/cosine modes plus a linear trend."""
    x = grid.x
    u = rng.normal() + rng.normal() * x
    for k in range(1, modes + 1):
        u = u + rng.normal() / k * np.sin(k * np.pi * x + rng.uniform(0.0, 2.0 * np.pi))
    return FlowState(u=u, X=u[0] / ep.boundary_gain)


def state_norm(s: FlowState) -> float:
    return max(float(np.max(np.abs(s.u))), abs(s.X))


def composition_error(
    s: FlowState, g: GammaKernel, d: DeltaKernel | None, grid: Grid
) -> float:
    """||inverse(forward(s)) - s||_inf / ||s||_inf; ``d=None`` uses the exact
    triangular inverse."""
    ts = forward_transform(s, g, grid)
    back = numerical_inverse(ts, g, grid) if d is None else inverse_transform(ts, d, grid)
    err = max(float(np.max(np.abs(back.u - s.u))), abs(back.X - s.X))
    norm = state_norm(s)
    return err / norm if norm > 0.0 else err


@dataclass
class InverseReport:
    """Outcome of the two-resolution composition test for one kernel pair."""

    form: str
    closed_form_errors: tuple[float, float]
    numerical_errors: tuple[float, float]
    resolutions: tuple[int, int]
    ratio_limit: float = 0.6
    abs_limit: float = 1e-2
    floor: float = 1e-10
    notes: list[str] = field(default_factory=list)

    @staticmethod
    def _passes(errors, ratio_limit, abs_limit, floor) -> bool:
        coarse, fine = errors
        if fine > abs_limit:
            return False
        # An exact inverse sits at round-off on both grids; no decay to measure.
        if fine <= floor and coarse <= floor:
            return True
        return fine <= ratio_limit * coarse

    @property
    def closed_form_pass(self) -> bool:
        return self._passes(self.closed_form_errors, self.ratio_limit, self.abs_limit, self.floor)

    @property
    def numerical_pass(self) -> bool:
        return self._passes(self.numerical_errors, self.ratio_limit, self.abs_limit, self.floor)

    @property
    def passed(self) -> bool:
        return self.closed_form_pass or self.numerical_pass

    def lines(self) -> list[str]:
        (n1, n2) = self.resolutions
        out = [
            f"kernel_form: {self.form}",
            f"closed_form_error_N{n1}: {self.closed_form_errors[0]:.6e}",
            f"closed_form_error_N{n2}: {self.closed_form_errors[1]:.6e}",
            f"closed_form_pass: {str(self.closed_form_pass).lower()}",
            f"numerical_error_N{n1}: {self.numerical_errors[0]:.6e}",
            f"numerical_error_N{n2}: {self.numerical_errors[1]:.6e}",
            f"numerical_pass: {str(self.numerical_pass).lower()}",
        ]
        out.extend(f"note: {n}" for n in self.notes)
        return out


def check_inverse(
    ep: EffectiveParams,
    lam: float,
    form: str = "consistent",
    resolutions: tuple[int, int] = (200, 400),
    n_states: int = 20,
    seed: int = 0,
) -> InverseReport:
    """Measure composition error of forward/inverse maps at two resolutions.

    The same random smooth states are resampled on both grids.  If the closed
    form fails, the triangular inverse is reported alongside it.
    """
    from .kernels import solve_delta, solve_gamma
    from .params import Grid as _Grid

    g = solve_gamma(ep, lam, form)
    d = solve_delta(ep, lam, form)
    closed, numeric = [], []
    for N in resolutions:
        grid = _Grid(N=N, dt=1.0, t_final=0.0)
        rng = np.random.default_rng(seed)
        ce = ne = 0.0
        for _ in range(n_states):
            s = random_compatible_state(ep, grid, rng)
            ce = max(ce, composition_error(s, g, d, grid))
            ne = max(ne, composition_error(s, g, None, grid))
        closed.append(ce)
        numeric.append(ne)
    report = InverseReport(
        form=form,
        closed_form_errors=(closed[0], closed[1]),
        numerical_errors=(numeric[0], numeric[1]),
        resolutions=resolutions,
    )
    if not report.closed_form_pass:
        report.notes.append(
            f"closed-form inverse kernel ({form}) does not invert the forward map; "
            "use the triangular numerical inverse"
        )
    return report
