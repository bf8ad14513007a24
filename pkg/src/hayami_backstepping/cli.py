"""Command-line front end.

Exit codes: 0 success, 2 validation error, 3 numerical instability,
4 failed check (certification or kernel residuals).
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import errata
from .analysis import certify
from .config import ConfigError, ScenarioConfig, load_config
from .controller import tune_lambda
from .kernels import KERNEL_FORMS, solve_delta, solve_gamma
from .output import format_value, read_keyvalues, read_record, write_keyvalues, write_record, write_table
from .params import EffectiveParams, effective_params, make_grid
from .simulator import NumericalInstability, convergence_study, simulate
from .transforms import check_inverse, physical_to_state

log = logging.getLogger("hayami_backstepping")

EXIT_OK, EXIT_INVALID, EXIT_UNSTABLE, EXIT_FAILED = 0, 2, 3, 4

KERNEL_RESIDUAL_TOL = 1e-9
KERNEL_BC_RTOL = 1e-12


class ValidationError(Exception):
    pass


def _setup(cfg: ScenarioConfig):
    ep = effective_params(cfg.channel, cfg.mode)
    grid = make_grid(ep, cfg.N, cfg.dt, cfg.t_final, cfg.record_every)
    return ep, grid


def _tune(cfg: ScenarioConfig, ep: EffectiveParams, grid):
    return tune_lambda(
        ep,
        grid,
        cfg.initial_profile(),
        lambda_min=cfg.tune_lambda_min,
        lambda_max=cfg.tune_lambda_max,
        steps=cfg.tune_steps,
        tol=cfg.tune_tol,
        form=cfg.kernel_form,
    )


def _resolve_lambda(cfg, ep, grid) -> tuple[float, list[tuple[str, object]]]:
    if cfg.lam is not None:
        return cfg.lam, [("lambda_source", "config")]
    result = _tune(cfg, ep, grid)
    return result.lam, [
        ("lambda_source", "tuned"),
        ("tuning_residual", float(result.residual)),
        ("tuning_bracketed", result.bracketed),
    ]


def _out_dir(args, cfg: ScenarioConfig) -> Path:
    if args.out:
        return Path(args.out)
    return Path(cfg.base_dir) / cfg.output


def cmd_simulate(args, cfg: ScenarioConfig) -> int:
    ep, grid = _setup(cfg)
    if grid.n_steps > cfg.max_steps:
        raise ValidationError(
            f"{grid.n_steps} time steps exceed max_steps = {cfg.max_steps} "
            f"(dt = {grid.dt:.3g} s after the CFL clamp)"
        )
    lam, lam_info = _resolve_lambda(cfg, ep, grid)
    g = solve_gamma(ep, lam, cfg.kernel_form)
    s0 = physical_to_state(cfg.initial_profile(), ep, grid)
    record = simulate(s0, g, grid)
    out = _out_dir(args, cfg)
    write_record(record, out)
    meta = [("config." + k, v) for k, v in cfg.echo()]
    meta += [
        ("lambda", float(lam)),
        *lam_info,
        ("effective_dt", float(grid.dt)),
        ("dt_clamped", grid.clamped),
        ("courant", float(grid.courant(ep))),
        ("n_steps", grid.n_steps),
        ("t_final", float(record.t[-1])),
        ("snapshots", len(record)),
        ("max_abs_q_final", float(np.max(np.abs(record.q[-1])))),
        ("z_weir_initial", float(record.z_weir[0])),
        ("z_weir_final", float(record.z_weir[-1])),
    ]
    meta += [
        (f"notice.{key}", errata.NOTICES[key])
        for key in errata.notices_for(cfg.mode, cfg.kernel_form, ic_kind=cfg.ic_kind)
    ]
    write_keyvalues(out / "metadata.txt", meta, timestamp=True)
    print(f"lambda: {lam:.17g}")
    print(f"t_final: {record.t[-1]:.17g}")
    print(f"max_abs_q_final: {np.max(np.abs(record.q[-1])):.17g}")
    print(f"wrote: {out / 'snapshots.csv'}")
    return EXIT_OK


def cmd_tune(args, cfg: ScenarioConfig) -> int:
    ep, grid = _setup(cfg)
    result = _tune(cfg, ep, grid)
    out = _out_dir(args, cfg)
    write_table(out / "lambda_scan.csv", ["lambda", "residual"],
                np.column_stack([result.lambdas, result.residuals]))
    items = [
        ("lambda", float(result.lam)),
        ("residual", float(result.residual)),
        ("bracketed", result.bracketed),
        ("mode", cfg.mode),
        ("kernel_form", cfg.kernel_form),
    ]
    write_keyvalues(out / "tuning.txt", items)
    for k, v in items:
        print(f"{k}: {format_value(v)}")
    return EXIT_OK


def kernel_report(ep: EffectiveParams, lam: float, samples: int = 100) -> list[tuple[str, object]]:
    """Residual and boundary-condition checks for both kernel forms."""
    rows: list[tuple[str, object]] = [("lambda", float(lam)), ("mode", ep.mode)]
    for form in KERNEL_FORMS:
        for name, k in (("gamma", solve_gamma(ep, lam, form)), ("delta", solve_delta(ep, lam, form))):
            sol = k.sol
            y0, yp0, _ = sol.derivatives(0.0)
            bc_value = abs(float(y0) - sol.value0) / max(abs(sol.value0), 1e-300)
            bc_slope = abs(float(yp0) - sol.slope0) / max(abs(sol.slope0), 1e-300)
            pre = f"{form}.{name}"
            rows += [
                (f"{pre}.root_kind", sol.root_kind),
                (f"{pre}.r_plus", str(sol.r_plus)),
                (f"{pre}.r_minus", str(sol.r_minus)),
                (f"{pre}.residual", float(k.residual(samples))),
                (f"{pre}.bc_value_error", bc_value),
                (f"{pre}.bc_slope_error", bc_slope),
                (f"{pre}.value_at_1", float(k(1.0))),
            ]
    return rows


def cmd_verify_kernels(args, cfg: ScenarioConfig) -> int:
    ep, grid = _setup(cfg)
    lam, lam_info = _resolve_lambda(cfg, ep, grid)
    rows = kernel_report(ep, lam) + lam_info
    ok = all(
        v <= KERNEL_RESIDUAL_TOL for k, v in rows if k.endswith(".residual")
    ) and all(v <= KERNEL_BC_RTOL for k, v in rows if k.endswith("_error"))
    inv = check_inverse(ep, lam, cfg.kernel_form, resolutions=(cfg.N, 2 * cfg.N))
    rows += [(f"inverse.{line.split(': ', 1)[0]}", line.split(": ", 1)[1]) for line in inv.lines()]
    rows.append(("passed", ok and inv.passed))
    out = _out_dir(args, cfg)
    write_keyvalues(out / "kernels.txt", rows)
    for k, v in rows:
        print(f"{k}: {format_value(v)}")
    return EXIT_OK if ok and inv.passed else EXIT_FAILED


def cmd_convergence(args, cfg: ScenarioConfig) -> int:
    ep = effective_params(cfg.channel, cfg.mode)
    levels = cfg.convergence_levels
    if len(levels) < 2 or any(n < 8 for n in levels):
        raise ValidationError("convergence.levels needs at least two grids with N >= 8")
    results = convergence_study(ep, levels, cfg.convergence_t_final, cfg.convergence_courant)
    rows = []
    prev = None
    for r in results:
        ratio = prev / r.l2_error if prev is not None else float("nan")
        rows.append([r.N, r.dt, r.t_final, r.l2_error, r.max_error, r.relative_l2, ratio])
        prev = r.l2_error
    out = _out_dir(args, cfg)
    header = ["N", "dt", "t_final", "l2_error", "max_error", "relative_l2", "ratio"]
    write_table(out / "convergence.csv", header, rows)
    print(",".join(header))
    for row in rows:
        print(",".join(f"{v:.6g}" for v in row))
    return EXIT_OK


def cmd_certify(args, cfg: ScenarioConfig) -> int:
    ep, grid = _setup(cfg)
    out = _out_dir(args, cfg)
    record_path = Path(args.record) if args.record else out / "snapshots.csv"
    if not record_path.exists():
        raise ValidationError(f"record file {record_path} not found")
    lam = cfg.lam
    meta_path = record_path.parent / "metadata.txt"
    if lam is None and meta_path.exists():
        lam = float(read_keyvalues(meta_path)["lambda"])
    if lam is None:
        raise ValidationError("lambda not given in the config and no metadata.txt beside the record")
    record = read_record(record_path, ep, grid, {"lambda": lam, "kernel_form": cfg.kernel_form})
    g = solve_gamma(ep, lam, cfg.kernel_form)
    d = solve_delta(ep, lam, cfg.kernel_form)
    cert = certify(record, g, d, c1=cfg.c1, tol=cfg.certify_tol)
    notices = "".join(
        f"notice.{key}: {errata.NOTICES[key]}\n"
        for key in errata.notices_for(cfg.mode, cfg.kernel_form, certify=True)
    )
    text = cert.report() + notices
    out.mkdir(parents=True, exist_ok=True)
    (out / "certificate.txt").write_text(text)
    sys.stdout.write(text)
    return EXIT_OK if cert.passed else EXIT_FAILED


COMMANDS = {
    "simulate": cmd_simulate,
    "tune-lambda": cmd_tune,
    "verify-kernels": cmd_verify_kernels,
    "convergence": cmd_convergence,
    "certify": cmd_certify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hayami-backstep",
        description="Backstepping boundary control of the Hayami channel model.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="scenario file (key = value lines)")
        p.add_argument("--out", help="output directory (overrides the config's output key)")
        if name == "certify":
            p.add_argument("--record", help="snapshots.csv to certify")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        return COMMANDS[args.command](args, cfg)
    except (ConfigError, ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalInstability as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNSTABLE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
