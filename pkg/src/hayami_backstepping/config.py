"""Scenario files: flat ``key = value`` lines with ``#`` comments."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .kernels import KERNEL_FORMS
from .params import SCALING_MODES, ChannelParams

IC_KINDS = ("constant", "gaussian-bump", "custom-table")


class ConfigError(ValueError):
    pass


_REQUIRED = object()


def _float(text: str) -> float:
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(f"non-finite number {text!r}")
    return value


def _int(text: str) -> int:
    return int(text)


def _choice(options):
    def parse(text: str) -> str:
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {text!r}")
        return text

    return parse


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(part) for part in text.split(",") if part.strip())


def _str(text: str) -> str:
    return text


# config key -> (attribute, parser, default)
_SCHEMA: dict[str, tuple] = {
    "b": ("b", _float, _REQUIRED),
    "B0": ("B0", _float, _REQUIRED),
    "C0": ("C0", _float, _REQUIRED),
    "D0": ("D0", _float, _REQUIRED),
    "L": ("L", _float, _REQUIRED),
    "mode": ("mode", _choice(SCALING_MODES), "dimensional"),
    "kernel_form": ("kernel_form", _choice(KERNEL_FORMS), "consistent"),
    "N": ("N", _int, _REQUIRED),
    "dt": ("dt", _float, _REQUIRED),
    "t_final": ("t_final", _float, _REQUIRED),
    "record_every": ("record_every", _int, 1),
    "max_steps": ("max_steps", _int, 50_000_000),
    "lambda": ("lam", _float, None),
    "c1": ("c1", _float, None),
    "certify.tol": ("certify_tol", _float, 0.05),
    "ic.kind": ("ic_kind", _choice(IC_KINDS), _REQUIRED),
    "ic.amplitude": ("ic_amplitude", _float, 0.0),
    "ic.offset": ("ic_offset", _float, 0.0),
    "ic.center": ("ic_center", _float, None),
    "ic.width": ("ic_width", _float, None),
    "ic.table": ("ic_table", _str, None),
    "output": ("output", _str, "out"),
    "tune.lambda_min": ("tune_lambda_min", _float, 1e-4),
    "tune.lambda_max": ("tune_lambda_max", _float, 10.0),
    "tune.steps": ("tune_steps", _int, 200),
    "tune.tol": ("tune_tol", _float, 1e-15),
    "convergence.levels": ("convergence_levels", _int_list, (50, 100, 200)),
    "convergence.t_final": ("convergence_t_final", _float, 100.0),
    "convergence.courant": ("convergence_courant", _float, 0.4),
}


@dataclass(frozen=True)
class ScenarioConfig:
    b: float
    B0: float
    C0: float
    D0: float
    L: float
    mode: str
    kernel_form: str
    N: int
    dt: float
    t_final: float
    record_every: int
    max_steps: int
    lam: float | None
    c1: float | None
    certify_tol: float
    ic_kind: str
    ic_amplitude: float
    ic_offset: float
    ic_center: float | None
    ic_width: float | None
    ic_table: str | None
    output: str
    tune_lambda_min: float
    tune_lambda_max: float
    tune_steps: int
    tune_tol: float
    convergence_levels: tuple[int, ...]
    convergence_t_final: float
    convergence_courant: float
    base_dir: str = "."

    @property
    def channel(self) -> ChannelParams:
        return ChannelParams(b=self.b, B0=self.B0, C0=self.C0, D0=self.D0, L=self.L)

    def echo(self) -> list[tuple[str, str]]:
        """All keys with their effective values, defaults included."""
        out = []
        for key, (attr, _, _) in _SCHEMA.items():
            value = getattr(self, attr)
            if value is None:
                text = "none"
            elif isinstance(value, tuple):
                text = ",".join(str(v) for v in value)
            elif isinstance(value, float):
                text = f"{value:.17g}"
            else:
                text = str(value)
            out.append((key, text))
        return out

    def initial_profile(self):
        """Vectorized q0(x_phys) on [0, L]."""
        a, off = self.ic_amplitude, self.ic_offset
        if self.ic_kind == "constant":
            return lambda x: np.full_like(np.asarray(x, dtype=float), a + off)
        if self.ic_kind == "gaussian-bump":
            c = self.L / 2.0 if self.ic_center is None else self.ic_center
            s = self.L / 10.0 if self.ic_width is None else self.ic_width
            return lambda x: off + a * np.exp(-((np.asarray(x, dtype=float) - c) ** 2) / (2 * s * s))
        path = Path(self.base_dir) / str(self.ic_table)
        table = np.loadtxt(path, delimiter=",", ndmin=2, comments="#")
        xs, qs = table[:, 0], table[:, 1]
        order = np.argsort(xs)
        return lambda x: np.interp(x, xs[order], qs[order]) + off


def parse_config(text: str, base_dir: str = ".") -> ScenarioConfig:
    values: dict[str, object] = {}
    errors: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            errors.append(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
            continue
        key, _, value = (part.strip() for part in line.partition("="))
        if key not in _SCHEMA:
            errors.append(f"line {lineno}: unknown key {key!r}")
            continue
        if key in values:
            errors.append(f"line {lineno}: duplicate key {key!r}")
            continue
        attr, parser, _ = _SCHEMA[key]
        try:
            values[attr] = parser(value)
        except ValueError as exc:
            errors.append(f"line {lineno}: bad value for {key!r}: {exc}")
    missing = [k for k, (attr, _, d) in _SCHEMA.items() if d is _REQUIRED and attr not in values]
    if missing:
        errors.append("missing required keys: " + ", ".join(missing))
    if errors:
        raise ConfigError("\n".join(errors))

    for key, (attr, _, default) in _SCHEMA.items():
        values.setdefault(attr, default)
    if values["ic_kind"] == "custom-table" and values["ic_table"] is None:
        raise ConfigError("ic.table is required when ic.kind = custom-table")
    cfg = ScenarioConfig(base_dir=base_dir, **values)
    try:
        cfg.channel
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if cfg.lam is not None and cfg.lam <= 0.0:
        raise ConfigError("lambda must be positive")
    if cfg.c1 is not None and not 0.0 < cfg.c1 < 0.5:
        raise ConfigError("c1 must lie in (0, 1/2)")
    return cfg


def load_config(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    return parse_config(path.read_text(), base_dir=str(path.parent))

