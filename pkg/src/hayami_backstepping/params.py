"""Channel constants, unit-domain rescaling and time-step configuration."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

ScalingMode = Literal["paper-literal", "dimensional"]
SCALING_MODES: tuple[str, ...] = ("paper-literal", "dimensional")


def _check_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class ChannelParams:
    """Physical constants of a rectangular channel closed by a weir.

    Attributes
    ----------
    b : float
        Weir linearization constant, q(L, t) = b z(L, t) [m^2/s].
    B0 : float
        Bed width [m].
    C0 : float
        Nominal celerity [m/s].
    D0 : float
        Nominal diffusivity [m^2/s].
    L : float
        Channel length [m].
    """

    b: float
    B0: float
    C0: float
    D0: float
    L: float

    def __post_init__(self) -> None:
        for name in ("b", "B0", "C0", "D0", "L"):
            value = _check_finite(name, getattr(self, name))
            if value <= 0.0:
                raise ValueError(f"{name} must be strictly positive, got {value!r}")
            object.__setattr__(self, name, value)


#: Reference channel: b = 1 m^2/s, B0 = 7 m, C0 = 20 m/s, D0 = 1800 m^2/s, L = 1000 m.
REFERENCE_CHANNEL = ChannelParams(b=1.0, B0=7.0, C0=20.0, D0=1800.0, L=1000.0)


@dataclass(frozen=True)
class EffectiveParams:
    """Coefficients of the flipped system posed on the unit interval.

    In ``dimensional`` mode the chain rule for x' = (L - x)/L is applied
    (B -> B0 L, C -> C0/L, D -> D0/L^2); in ``paper-literal`` mode the
    physical constants are carried over unchanged.
    """

    b: float
    B: float
    C: float
    D: float
    mode: str
    channel: ChannelParams

    @property
    def exponent_rate(self) -> float:
        """Gauge exponent C/(2D): q = u exp(exponent_rate x)."""
        return self.C / (2.0 * self.D)

    @property
    def boundary_gain(self) -> float:
        """b/B, the ratio u(0, t)/X(t)."""
        return self.b / self.B

    @property
    def drift(self) -> float:
        """Open-loop ODE decay coefficient b C/(2 B D) [1/s]."""
        return self.b * self.C / (2.0 * self.B * self.D)

    @property
    def reaction(self) -> float:
        """Reaction coefficient C^2/(4D) of the gauge-scaled PDE [1/s]."""
        return self.C * self.C / (4.0 * self.D)

    @property
    def L(self) -> float:
        return self.channel.L


def effective_params(p: ChannelParams, mode: str = "dimensional") -> EffectiveParams:
    if mode == "paper-literal":
        return EffectiveParams(b=p.b, B=p.B0, C=p.C0, D=p.D0, mode=mode, channel=p)
    if mode == "dimensional":
        return EffectiveParams(
            b=p.b, B=p.B0 * p.L, C=p.C0 / p.L, D=p.D0 / p.L**2, mode=mode, channel=p
        )
    raise ValueError(f"unknown scaling mode {mode!r}; expected one of {SCALING_MODES}")


@dataclass(frozen=True)
class Grid:
    """Uniform grid on [0, 1] with an explicit time step.

    ``dt`` is the step actually used; ``dt_requested`` keeps what the caller
    asked for so the clamp can be reported.
    """

    N: int
    dt: float
    t_final: float
    record_every: int = 1
    dt_requested: float | None = None

    @property
    def dx(self) -> float:
        return 1.0 / self.N

    @property
    def x(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.N + 1)

    @property
    def n_steps(self) -> int:
        # Tolerate round-off in t_final/dt so an exact multiple is not overshot.
        return int(math.ceil(self.t_final / self.dt - 1e-9))

    def courant(self, ep: EffectiveParams) -> float:
        """Diffusion number D dt/dx^2."""
        return ep.D * self.dt / self.dx**2

    @property
    def clamped(self) -> bool:
        return self.dt_requested is not None and self.dt < self.dt_requested


def cfl_limit(ep: EffectiveParams, N: int) -> float:
    """Largest dt with D dt/dx^2 <= 1/2."""
    return (1.0 / N) ** 2 / (2.0 * ep.D)


def make_grid(
    ep: EffectiveParams,
    N: int,
    dt_requested: float,
    t_final: float,
    record_every: int = 1,
) -> Grid:
    """Build a grid, shrinking ``dt_requested`` to the CFL bound if needed."""
    dt_requested = _check_finite("dt_requested", dt_requested)
    t_final = _check_finite("t_final", t_final)
    if int(N) != N or N < 8:
        raise ValueError(f"N must be an integer >= 8, got {N!r}")
    if dt_requested <= 0.0:
        raise ValueError(f"dt_requested must be positive, got {dt_requested!r}")
    if t_final < 0.0:
        raise ValueError(f"t_final must be non-negative, got {t_final!r}")
    if int(record_every) != record_every or record_every < 1:
        raise ValueError(f"record_every must be a positive integer, got {record_every!r}")
    N = int(N)
    dt = min(dt_requested, cfl_limit(ep, N))
    return Grid(
        N=N, dt=dt, t_final=t_final, record_every=int(record_every), dt_requested=dt_requested
    )
