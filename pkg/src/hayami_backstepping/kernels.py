"""Closed-form backstepping kernels.

Both the forward kernel gamma and the inverse kernel delta solve linear,
constant-coefficient second-order ODEs on [0, 1] with data given at x = 0.
The two-dimensional kernels are convolution views of them:
k(x, y) = gamma(x - y)/D and l(x, y) = delta(x - y)/D for y <= x.

Two coefficient sets are available through ``form``:

``"printed"``
    gamma'' + (b/B) gamma' - (C/(2 D^2)) (C/2 - b/B) gamma = 0 and
    delta'' = (C^2/(4 D^2)) delta' - (lambda/D) delta, verbatim.
``"consistent"``
    gamma'' + (b/(B D)) gamma' - (C/(2 D^2)) (C/2 - b/B) gamma = 0 and
    delta'' = ((C^2/(4D) - lambda)/D) delta.  These follow from matching
    the transformed plant to the target system term by term, and the pair is
    an exact inverse: gamma + delta = (delta * gamma)/D (convolution).

The boundary data are shared by both forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Literal

import numpy as np

from .params import EffectiveParams

KernelForm = Literal["printed", "consistent"]
KERNEL_FORMS: tuple[str, ...] = ("printed", "consistent")

REPEATED_ROOT_RTOL = 1e-12
_DOMAIN_SLACK = 1e-12


@dataclass(frozen=True)
class SecondOrderSolution:
    """Solution of y'' = a1 y' + a0 y with y(0) = value0, y'(0) = slope0.

    Written as y = exp(sigma x) (c_a C(x) + c_b S(x)) where sigma = a1/2,
    kappa = sigma^2 + a0 is a quarter of the discriminant, and (C, S) is
    (cosh(h x), sinh(h x)/h), (1, x) or (cos(w x), sin(w x)/w) depending on
    the sign of kappa.  This basis has no cancellation as the roots merge.
    """

    a1: float
    a0: float
    value0: float
    slope0: float
    root_kind: str
    sigma: float
    spread: float  # h for real-distinct, omega for complex, 0 for repeated
    c_a: float
    c_b: float

    @classmethod
    def solve(cls, a1: float, a0: float, value0: float, slope0: float) -> "SecondOrderSolution":
        for name, v in (("a1", a1), ("a0", a0), ("value0", value0), ("slope0", slope0)):
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v!r}")
        sigma = 0.5 * a1
        kappa = sigma * sigma + a0
        scale = sigma * sigma + abs(a0)
        if abs(kappa) <= REPEATED_ROOT_RTOL * scale:
            kind, spread = "real-repeated", 0.0
        elif kappa > 0.0:
            kind, spread = "real-distinct", math.sqrt(kappa)
        else:
            kind, spread = "complex-conjugate", math.sqrt(-kappa)
        return cls(
            a1=float(a1),
            a0=float(a0),
            value0=float(value0),
            slope0=float(slope0),
            root_kind=kind,
            sigma=sigma,
            spread=spread,
            c_a=float(value0),
            c_b=float(slope0) - sigma * float(value0),
        )

    @property
    def kappa(self) -> float:
        if self.root_kind == "real-distinct":
            return self.spread**2
        if self.root_kind == "complex-conjugate":
            return -self.spread**2
        return 0.0

    @property
    def r_plus(self) -> complex | float:
        if self.root_kind == "complex-conjugate":
            return complex(self.sigma, self.spread)
        return self.sigma + self.spread

    @property
    def r_minus(self) -> complex | float:
        if self.root_kind == "complex-conjugate":
            return complex(self.sigma, -self.spread)
        return self.sigma - self.spread

    def exponential_coefficients(self) -> tuple[float, float]:
        """(A, B) with y = A exp(r_plus x) + B exp(r_minus x); real-distinct only."""
        if self.root_kind != "real-distinct":
            raise ValueError(f"no exponential form for root kind {self.root_kind!r}")
        half = 0.5 * self.c_b / self.spread
        return 0.5 * self.c_a + half, 0.5 * self.c_a - half

    def _basis(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        h = self.spread
        if self.root_kind == "real-distinct":
            return np.cosh(h * x), np.sinh(h * x) / h
        if self.root_kind == "complex-conjugate":
            return np.cos(h * x), np.sin(h * x) / h
        return np.ones_like(x), x.copy()

    def derivatives(self, x) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return (y, y', y'') at ``x``, all from the closed form."""
        x = np.asarray(x, dtype=float)
        c, s = self._basis(x)
        f = self.c_a * c + self.c_b * s
        fp = self.c_a * self.kappa * s + self.c_b * c
        e = np.exp(self.sigma * x)
        y = e * f
        yp = e * (self.sigma * f + fp)
        ypp = e * ((self.sigma**2 + self.kappa) * f + 2.0 * self.sigma * fp)
        return y, yp, ypp

    def value(self, x):
        x = np.asarray(x, dtype=float)
        c, s = self._basis(x)
        return np.exp(self.sigma * x) * (self.c_a * c + self.c_b * s)

    def deriv(self, x):
        return self.derivatives(x)[1]

    def residual(self, x) -> np.ndarray:
        y, yp, ypp = self.derivatives(x)
        return ypp - self.a1 * yp - self.a0 * y

    def max_relative_residual(self, samples: int = 100) -> float:
        if samples < 10:
            raise ValueError("need at least 10 samples")
        x = np.linspace(0.0, 1.0, samples)
        y, yp, ypp = self.derivatives(x)
        res = ypp - self.a1 * yp - self.a0 * y
        scale = np.max(np.abs(ypp) + np.abs(self.a1 * yp) + np.abs(self.a0 * y))
        if scale == 0.0:
            return 0.0
        return float(np.max(np.abs(res)) / scale)


def _check_domain(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if np.any(x < -_DOMAIN_SLACK) or np.any(x > 1.0 + _DOMAIN_SLACK):
        raise ValueError("kernel argument outside [0, 1]")
    return np.clip(x, 0.0, 1.0)


@dataclass(frozen=True)
class Kernel:
    """One-dimensional kernel together with its convolution view."""

    sol: SecondOrderSolution
    lam: float
    ep: EffectiveParams
    form: str

    def __call__(self, x):
        return self.sol.value(_check_domain(x))

    def deriv(self, x):
        return self.sol.deriv(_check_domain(x))

    def kernel(self, x, y):
        """Two-dimensional kernel value at (x, y), defined for 0 <= y <= x <= 1."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if np.any(y < -_DOMAIN_SLACK) or np.any(x - y < -_DOMAIN_SLACK):
            raise ValueError("kernel is defined only for 0 <= y <= x <= 1")
        return self(x - y) / self.ep.D

    def kernel_x(self, x, y):
        """Partial derivative in x of the two-dimensional kernel."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if np.any(y < -_DOMAIN_SLACK) or np.any(x - y < -_DOMAIN_SLACK):
            raise ValueError("kernel is defined only for 0 <= y <= x <= 1")
        return self.deriv(x - y) / self.ep.D

    def residual(self, samples: int = 100) -> float:
        return self.sol.max_relative_residual(samples)


class GammaKernel(Kernel):
    """Forward kernel gamma; k(x, y) = gamma(x - y)/D."""


class DeltaKernel(Kernel):
    """Inverse kernel delta; l(x, y) = delta(x - y)/D."""


def _check_lambda(lam: float) -> float:
    lam = float(lam)
    if not math.isfinite(lam) or lam <= 0.0:
        raise ValueError(f"lambda must be positive and finite, got {lam!r}")
    return lam


def _check_form(form: str) -> None:
    if form not in KERNEL_FORMS:
        raise ValueError(f"unknown kernel form {form!r}; expected one of {KERNEL_FORMS}")


def gamma_coefficients(ep: EffectiveParams, form: str = "consistent") -> tuple[float, float]:
    """(a1, a0) of gamma'' = a1 gamma' + a0 gamma."""
    _check_form(form)
    beta = ep.boundary_gain
    a0 = ep.C / (2.0 * ep.D**2) * (0.5 * ep.C - beta)
    a1 = -beta if form == "printed" else -beta / ep.D
    return a1, a0


def delta_coefficients(
    ep: EffectiveParams, lam: float, form: str = "consistent"
) -> tuple[float, float]:
    """(a1, a0) of delta'' = a1 delta' + a0 delta."""
    _check_form(form)
    if form == "printed":
        return ep.C**2 / (4.0 * ep.D**2), -lam / ep.D
    return 0.0, (ep.reaction - lam) / ep.D


def solve_gamma(ep: EffectiveParams, lam: float, form: str = "consistent") -> GammaKernel:
    lam = _check_lambda(lam)
    a1, a0 = gamma_coefficients(ep, form)
    beta = ep.boundary_gain
    value0 = beta
    slope0 = -lam + ep.drift - beta * beta / ep.D
    sol = SecondOrderSolution.solve(a1, a0, value0, slope0)
    return GammaKernel(sol=sol, lam=lam, ep=ep, form=form)


def solve_delta(ep: EffectiveParams, lam: float, form: str = "consistent") -> DeltaKernel:
    lam = _check_lambda(lam)
    a1, a0 = delta_coefficients(ep, lam, form)
    sol = SecondOrderSolution.solve(a1, a0, -ep.boundary_gain, -ep.drift + lam)
    return DeltaKernel(sol=sol, lam=lam, ep=ep, form=form)


def gamma_eval(g: GammaKernel, x):
    return g(x)


def gamma_deriv(g: GammaKernel, x):
    return g.deriv(x)


def kernel_k(g: GammaKernel, x, y):
    return g.kernel(x, y)


def kernel_l(d: DeltaKernel, x, y):
    return d.kernel(x, y)


def verify_kernel_residuals(kernel: Kernel, samples: int = 100) -> float:
    """Maximum relative ODE residual of ``kernel`` over uniform samples of [0, 1]."""
    return kernel.residual(samples)


def corrupt(kernel: Kernel, factor: float = 1.5) -> Kernel:
    """Copy of ``kernel`` whose solution no longer matches its ODE (a0 scaled).

    Used as a negative control for the residual check.
    """
    sol = replace(kernel.sol, a0=kernel.sol.a0 * factor + (factor - 1.0))
    return replace(kernel, sol=sol)
