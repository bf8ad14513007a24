"""Lyapunov functional, norm-equivalence constants and numerical certification."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .kernels import DeltaKernel, GammaKernel, Kernel
from .params import EffectiveParams, Grid
from .simulator import SimulationRecord
from .transforms import volterra_matrix

CERT_TOL = 0.05
_SLACK = 1e-12


def l2_squared(f: np.ndarray, grid: Grid) -> np.ndarray:
    """Trapezoidal ||f||^2 along the last axis."""
    return np.trapezoid(np.asarray(f) ** 2, dx=grid.dx, axis=-1)


def space_derivative(f: np.ndarray, grid: Grid) -> np.ndarray:
    """Second-order central differences, one-sided second order at the ends."""
    return np.gradient(np.asarray(f, dtype=float), grid.dx, axis=-1, edge_order=2)


def norms_gamma(field_values: np.ndarray, X, grid: Grid) -> np.ndarray:
    """||f||^2 + ||f_x||^2 + X^2; Gamma_1 for f = w, Gamma_2 for f = u."""
    f = np.asarray(field_values, dtype=float)
    return l2_squared(f, grid) + l2_squared(space_derivative(f, grid), grid) + np.square(X)


def decay_rate_mu(ep: EffectiveParams, c1: float, lam: float) -> float:
    """min{C^2/(2D), 2[D + c1 (C^2/(4D) - 2D)], 2 lambda^2 D c1}; may be <= 0."""
    if not 0.0 < c1 < 0.5:
        raise ValueError(f"c1 must lie in (0, 1/2), got {c1!r}")
    if lam <= 0.0:
        raise ValueError(f"lambda must be positive, got {lam!r}")
    return min(mu_terms(ep, c1, lam))


def mu_terms(ep: EffectiveParams, c1: float, lam: float) -> tuple[float, float, float]:
    C, D = ep.C, ep.D
    return (
        C * C / (2.0 * D),
        2.0 * (D + c1 * (C * C / (4.0 * D) - 2.0 * D)),
        2.0 * lam * lam * D * c1,
    )


def best_c1(ep: EffectiveParams, lam: float, points: int = 999) -> float:
    """c1 on a uniform grid inside (0, 1/2) maximizing mu (first maximizer)."""
    grid = np.linspace(0.0, 0.5, points + 2)[1:-1]
    mus = np.array([decay_rate_mu(ep, c, lam) for c in grid])
    return float(grid[int(np.argmax(mus))])


@dataclass(frozen=True)
class LyapunovConfig:
    c1: float
    c2: float
    mu: float
    lam: float

    @property
    def certifiable(self) -> bool:
        return self.mu > 0.0


def lyapunov_config(ep: EffectiveParams, lam: float, c1: float | None = None) -> LyapunovConfig:
    """c2 = 2 D lambda c1 and the matching mu; c1 from :func:`best_c1` if omitted."""
    if c1 is None:
        c1 = best_c1(ep, lam)
    mu = decay_rate_mu(ep, c1, lam)
    return LyapunovConfig(c1=c1, c2=2.0 * ep.D * lam * c1, mu=mu, lam=lam)


def lyapunov_V(w: np.ndarray, X, cfg: LyapunovConfig, grid: Grid) -> np.ndarray:
    """V = ||w||^2/2 + c1 ||w_x||^2/2 + c2 X^2/2 (vectorized over leading axes)."""
    w = np.asarray(w, dtype=float)
    return 0.5 * (
        l2_squared(w, grid)
        + cfg.c1 * l2_squared(space_derivative(w, grid), grid)
        + cfg.c2 * np.square(X)
    )


@dataclass(frozen=True)
class NormBounds:
    """Norm-equivalence constants between (w, X) and (u, X).

    The m's and R here are the ones valid for the functionals as defined: the
    X^2 term of each Gamma adds 1 to the X coefficient, the derivative bound
    of the inverse map has four terms (beta5 = 4 ||delta'||^2), and
    Gamma_1 <= m4 V needs m4 = 2 max{1, 1/c1, 1/c2}.  ``printed`` keeps the
    m1, m2, m4, beta5 and R obtained without those corrections, for reporting.
    """

    alpha1: float
    alpha2: float
    alpha3: float
    alpha4: float
    alpha5: float
    beta1: float
    beta2: float
    beta3: float
    beta4: float
    beta5: float
    m1: float
    m2: float
    m3: float
    m4: float
    R: float
    printed: dict = field(default_factory=dict)


def _kernel_integrals(kernel: Kernel, points: int) -> tuple[float, float, float, float]:
    """sup_x int_0^x k^2, sup_x int_0^x k_x^2, ||kernel||^2, ||kernel'||^2."""
    xs = np.linspace(0.0, 1.0, points)
    f = kernel(xs)
    fp = kernel.deriv(xs)
    D2 = kernel.ep.D ** 2
    sup_k2 = float(np.max(cumulative_trapezoid(f**2, xs, initial=0.0))) / D2
    sup_kx2 = float(np.max(cumulative_trapezoid(fp**2, xs, initial=0.0))) / D2
    return sup_k2, sup_kx2, float(np.trapezoid(f**2, xs)), float(np.trapezoid(fp**2, xs))


def norm_constants(
    g: GammaKernel, d: DeltaKernel, cfg: LyapunovConfig, points: int = 4001
) -> NormBounds:
    ep = g.ep
    diag2 = (ep.boundary_gain / ep.D) ** 2  # k(x,x)^2 = l(x,x)^2
    k2, kx2, gam2, gamp2 = _kernel_integrals(g, points)
    l2, lx2, del2, delp2 = _kernel_integrals(d, points)

    a1 = 3.0 * (1.0 + k2)
    a2 = 3.0 * gam2
    a3 = 4.0 * (diag2 + kx2)
    a4 = 4.0
    a5 = 4.0 * gamp2
    b1 = 3.0 * (1.0 + l2)
    b2 = 3.0 * del2
    b3 = 4.0 * (diag2 + lx2)
    b4 = 4.0
    b5 = 4.0 * delp2

    m1 = max(a1 + a3, a4, a2 + a5 + 1.0)
    m2 = max(b1 + b3, b4, b2 + b5 + 1.0)
    m3 = max(1.0, cfg.c1, cfg.c2)
    m4 = 2.0 * max(1.0, 1.0 / cfg.c1, 1.0 / cfg.c2)

    p_b5 = 3.0 * delp2
    p_m1 = max(a1 + a3, a4, a2 + a5)
    p_m2 = max(b1 + b3, b4, b2 + p_b5)
    p_m4 = 2.0 * m3
    printed = {"beta5": p_b5, "m1": p_m1, "m2": p_m2, "m4": p_m4, "R": p_m1 * p_m2 * m3 * p_m4}
    return NormBounds(a1, a2, a3, a4, a5, b1, b2, b3, b4, b5, m1, m2, m3, m4, m1 * m2 * m3 * m4,
                      printed)


@dataclass
class StabilityCertificate:
    config: LyapunovConfig
    bounds: NormBounds
    lyapunov_pass: bool
    gamma2_pass: bool
    fitted_rate: float
    tol: float
    sandwich_violations: dict
    lyapunov_margin: float
    gamma2_margin: float
    z_weir_max: float
    z_weir_bounded: bool
    t_final: float
    printed_violations: dict = field(default_factory=dict)
    series: dict = field(default_factory=dict, repr=False)

    @property
    def sandwich_pass(self) -> bool:
        return all(v == 0 for v in self.sandwich_violations.values())

    @property
    def rate_pass(self) -> bool:
        return math.isnan(self.fitted_rate) or self.fitted_rate >= 0.9 * self.config.mu

    @property
    def passed(self) -> bool:
        return (
            self.config.certifiable
            and self.lyapunov_pass
            and self.gamma2_pass
            and self.sandwich_pass
            and self.z_weir_bounded
        )

    def report(self) -> str:
        """``key: value`` lines."""
        c, b = self.config, self.bounds
        rows = [
            ("certifiable", c.certifiable),
            ("c1", c.c1),
            ("c2", c.c2),
            ("lambda", c.lam),
            ("mu", c.mu),
            ("tol", self.tol),
            ("t_final", self.t_final),
            ("lyapunov_pass", self.lyapunov_pass),
            ("lyapunov_margin", self.lyapunov_margin),
            ("gamma2_pass", self.gamma2_pass),
            ("gamma2_margin", self.gamma2_margin),
            ("fitted_rate", self.fitted_rate),
            ("rate_pass", self.rate_pass),
            ("sandwich_pass", self.sandwich_pass),
        ]
        rows += [(f"violations_{k}", v) for k, v in self.sandwich_violations.items()]
        rows += [(f"printed_violations_{k}", v) for k, v in self.printed_violations.items()]
        rows += [("z_weir_max", self.z_weir_max), ("z_weir_bounded", self.z_weir_bounded)]
        for name in ("alpha1", "alpha2", "alpha3", "alpha4", "alpha5",
                     "beta1", "beta2", "beta3", "beta4", "beta5", "m1", "m2", "m3", "m4", "R"):
            rows.append((name, getattr(b, name)))
        rows += [(f"printed_{k}", v) for k, v in b.printed.items()]
        rows.append(("passed", self.passed))
        return "\n".join(f"{k}: {_fmt(v)}" for k, v in rows) + "\n"


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.17g}"


def fit_decay_rate(t: np.ndarray, values: np.ndarray) -> float:
    """Least-squares exponential rate: -slope of log(values) against t."""
    mask = values > 0.0
    if np.count_nonzero(mask) < 2:
        return float("nan")
    slope = np.polyfit(t[mask], np.log(values[mask]), 1)[0]
    return float(-slope)


def _envelope(values: np.ndarray, t: np.ndarray, scale: float, mu: float, tol: float):
    bound = (1.0 + tol) * scale * values[0] * np.exp(-mu * (t - t[0]))
    ok = values <= bound * (1.0 + _SLACK) + 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        margin = np.where(values > 0.0, bound / values, np.inf)
    return bool(np.all(ok)), float(np.min(margin))


def certify(
    record: SimulationRecord,
    g: GammaKernel,
    d: DeltaKernel,
    c1: float | None = None,
    tol: float = CERT_TOL,
) -> StabilityCertificate:
    """Check the decay envelopes and norm sandwiches along ``record``."""
    if len(record) == 0:
        raise ValueError("empty record")
    lam = record.metadata.get("lambda", g.lam)
    form = record.metadata.get("kernel_form", g.form)
    for k in (g, d):
        if k.form != form:
            raise ValueError(f"kernel form {k.form!r} does not match record form {form!r}")
        if k.ep != record.ep:
            raise ValueError("kernel parameters do not match the record")
        if not math.isclose(k.lam, lam, rel_tol=1e-12):
            raise ValueError(f"kernel lambda {k.lam!r} does not match record lambda {lam!r}")
    grid = record.grid
    cfg = lyapunov_config(record.ep, g.lam, c1)
    bounds = norm_constants(g, d, cfg)

    u = record.u
    X = record.X
    K = volterra_matrix(g, grid)
    w = u - np.outer(X, g(grid.x)) - u @ K.T

    V = lyapunov_V(w, X, cfg, grid)
    G1 = norms_gamma(w, X, grid)
    G2 = norms_gamma(u, X, grid)
    t = record.t

    if cfg.certifiable:
        lyap_ok, lyap_margin = _envelope(V, t, 1.0, cfg.mu, tol)
        g2_ok, g2_margin = _envelope(G2, t, bounds.R, cfg.mu, tol)
    else:
        lyap_ok = g2_ok = False
        lyap_margin = g2_margin = float("nan")

    s = 1.0 + _SLACK
    violations = {
        "G1_le_m1_G2": int(np.count_nonzero(G1 > bounds.m1 * G2 * s)),
        "G2_le_m2_G1": int(np.count_nonzero(G2 > bounds.m2 * G1 * s)),
        "V_le_m3_G1": int(np.count_nonzero(V > bounds.m3 * G1 * s)),
        "G1_le_m4_V": int(np.count_nonzero(G1 > bounds.m4 * V * s)),
    }
    p = bounds.printed
    printed_violations = {
        "G1_le_m1_G2": int(np.count_nonzero(G1 > p["m1"] * G2 * s)),
        "G2_le_m2_G1": int(np.count_nonzero(G2 > p["m2"] * G1 * s)),
        "G1_le_m4_V": int(np.count_nonzero(G1 > p["m4"] * V * s)),
    }

    z = record.z_weir
    half = max(1, z.size // 2)
    z_max = float(np.max(np.abs(z)))
    bounded = bool(
        np.all(np.isfinite(z)) and np.max(np.abs(z[half:])) <= np.max(np.abs(z[:half])) * s
    )
    return StabilityCertificate(
        config=cfg,
        bounds=bounds,
        lyapunov_pass=lyap_ok,
        gamma2_pass=g2_ok,
        fitted_rate=fit_decay_rate(t, G2),
        tol=tol,
        sandwich_violations=violations,
        lyapunov_margin=lyap_margin,
        gamma2_margin=g2_margin,
        z_weir_max=z_max,
        z_weir_bounded=bounded,
        t_final=float(t[-1]),
        printed_violations=printed_violations,
        series={"t": t, "V": V, "Gamma1": G1, "Gamma2": G2, "w": w},
    )
