"""Explicit time stepping of the closed-loop (X, u) cascade."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .controller import control_value, control_weights
from .kernels import GammaKernel
from .params import EffectiveParams, Grid
from .transforms import FlowState, gauge, physical_to_state


class NumericalInstability(RuntimeError):
    """Raised when the state stops being finite."""

    def __init__(self, t: float, message: str = "non-finite state"):
        super().__init__(f"{message} at t = {t:.6g} s")
        self.t = t


@dataclass
class SimulationRecord:
    """Snapshot series of a run; rows share the index of ``t``."""

    t: np.ndarray
    u: np.ndarray
    X: np.ndarray
    U: np.ndarray
    ep: EffectiveParams
    grid: Grid
    metadata: dict = field(default_factory=dict)

    @property
    def z_weir(self) -> np.ndarray:
        return self.X / self.ep.B

    @property
    def q(self) -> np.ndarray:
        """Physical flow deviation, ascending physical x in each row."""
        return (self.u * gauge(self.ep, self.grid))[:, ::-1]

    def state(self, k: int) -> FlowState:
        return FlowState(u=self.u[k], X=self.X[k], t=self.t[k])

    def __len__(self) -> int:
        return self.t.size


def _interior_update(u: np.ndarray, out: np.ndarray, r: float, react: float) -> None:
    out[1:-1] = u[1:-1] + r * (u[2:] - 2.0 * u[1:-1] + u[:-2]) - react * u[1:-1]


def step(s: FlowState, g: GammaKernel, grid: Grid, control: bool = True) -> FlowState:
    """One forward-Euler step of the closed loop.

    Interior nodes first, then X from the old boundary slope
    (u[1] - u[0])/dx with u[0] = (b/B) X, then u[0] from the new X and u[N]
    from the control law evaluated on the updated values.
    """
    ep = g.ep
    dt, dx = grid.dt, grid.dx
    u = s.u
    new = np.empty_like(u)
    _interior_update(u, new, ep.D * dt / dx**2, dt * ep.reaction)
    u0 = ep.boundary_gain * s.X
    X = s.X + dt * (-ep.drift * s.X + (u[1] - u0) / dx)
    new[0] = ep.boundary_gain * X
    if control:
        gamma1, weights = control_weights(g, grid)
        new[-1] = control_value(new, X, gamma1, weights)
    else:
        new[-1] = 0.0
    t = s.t + dt
    if not (np.all(np.isfinite(new)) and math.isfinite(X)):
        raise NumericalInstability(t)
    return FlowState(u=new, X=X, t=t)


def simulate(
    s0: FlowState,
    g: GammaKernel,
    grid: Grid,
    control: bool = True,
    metadata: dict | None = None,
) -> SimulationRecord:
    """Iterate :func:`step` from ``s0`` up to ``grid.t_final``.

    Snapshots are kept every ``grid.record_every`` steps plus the final one.
    With ``control=False`` the actuated boundary is held at zero.
    """
    ep = g.ep
    if s0.u.size != grid.N + 1:
        raise ValueError(f"state has {s0.u.size} nodes but grid expects {grid.N + 1}")
    dt, dx = grid.dt, grid.dx
    r = ep.D * dt / dx**2
    react = dt * ep.reaction
    beta = ep.boundary_gain
    drift = ep.drift
    gamma1, weights = control_weights(g, grid)
    n_steps = grid.n_steps
    every = grid.record_every

    u = s0.u.copy()
    new = np.empty_like(u)
    X = s0.X
    t0 = s0.t
    U = control_value(u, X, gamma1, weights) if control else 0.0

    ts, us, Xs, Us = [t0], [u.copy()], [X], [u[-1]]
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(1, n_steps + 1):
            _interior_update(u, new, r, react)
            X = X + dt * (-drift * X + (u[1] - beta * X) / dx)
            new[0] = beta * X
            U = control_value(new, X, gamma1, weights) if control else 0.0
            new[-1] = U
            u, new = new, u
            if n % every == 0 or n == n_steps:
                t = t0 + n * dt
                if not (np.all(np.isfinite(u)) and math.isfinite(X)):
                    raise NumericalInstability(t)
                ts.append(t)
                us.append(u.copy())
                Xs.append(X)
                Us.append(U)

    meta = {
        "mode": ep.mode,
        "kernel_form": g.form,
        "lambda": g.lam,
        "N": grid.N,
        "dt": dt,
        "dt_requested": grid.dt_requested if grid.dt_requested is not None else dt,
        "t_final": ts[-1],
        "n_steps": n_steps,
        "record_every": every,
        "courant": r,
        "control": control,
    }
    if metadata:
        meta.update(metadata)
    return SimulationRecord(
        t=np.array(ts),
        u=np.array(us),
        X=np.array(Xs),
        U=np.array(Us),
        ep=ep,
        grid=grid,
        metadata=meta,
    )


def run(
    ep: EffectiveParams,
    grid: Grid,
    q0,
    lam: float,
    form: str = "consistent",
    control: bool = True,
) -> SimulationRecord:
    """Closed-loop run from the physical initial profile ``q0``."""
    from .kernels import solve_gamma

    g = solve_gamma(ep, lam, form)
    s0 = physical_to_state(q0, ep, grid)
    return simulate(s0, g, grid, control=control)


@dataclass(frozen=True)
class VerificationResult:
    N: int
    dt: float
    t_final: float
    l2_error: float
    max_error: float
    amplitude: float  # peak of the exact solution at t_final

    @property
    def exact_l2(self) -> float:
        return self.amplitude / math.sqrt(2.0)

    @property
    def relative_l2(self) -> float:
        """L2 error over the L2 norm of the exact profile."""
        return self.l2_error / self.exact_l2


def exact_decay(ep: EffectiveParams, t: float) -> float:
    """Amplitude of sin(pi x) under u_t = D u_xx - (C^2/(4D)) u, zero Dirichlet data."""
    return math.exp(-(ep.D * math.pi**2 + ep.reaction) * t)


def run_verification(ep: EffectiveParams, grid: Grid) -> VerificationResult:
    """Interior scheme against the separable exact solution from u0 = sin(pi x).

    X is held at zero and both boundaries at zero, so only the FTCS update
    with the reaction term is exercised.
    """
    x = grid.x
    dt, dx = grid.dt, grid.dx
    r = ep.D * dt / dx**2
    react = dt * ep.reaction
    u = np.sin(np.pi * x)
    u[0] = u[-1] = 0.0
    new = np.zeros_like(u)
    n_steps = grid.n_steps
    for _ in range(n_steps):
        _interior_update(u, new, r, react)
        u, new = new, u
    t = n_steps * dt
    amp = exact_decay(ep, t)
    err = u - amp * np.sin(np.pi * x)
    l2 = math.sqrt(float(np.trapezoid(err**2, x)))
    return VerificationResult(
        N=grid.N,
        dt=dt,
        t_final=t,
        l2_error=l2,
        max_error=float(np.max(np.abs(err))),
        amplitude=amp,
    )


def convergence_study(
    ep: EffectiveParams,
    levels: tuple[int, ...] = (100, 200, 400),
    t_final: float = 100.0,
    courant: float = 0.4,
) -> list[VerificationResult]:
    """run_verification at each N with dt = courant dx^2/D (dt scales as dx^2).

    ``t_final`` is rounded to a whole number of steps at the coarsest level;
    finer levels take 4x as many steps per halving, so all end at the same t.
    """
    from .params import Grid as _Grid

    base = levels[0]
    dt0 = courant * (1.0 / base) ** 2 / ep.D
    n0 = max(1, round(t_final / dt0))
    dt0 = t_final / n0
    out = []
    for N in levels:
        factor = (N / base) ** 2
        dt = dt0 / factor
        out.append(run_verification(ep, _Grid(N=N, dt=dt, t_final=n0 * factor * dt)))
    return out
