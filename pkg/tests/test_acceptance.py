"""End-to-end acceptance criteria 1-9, one PASS/FAIL line each."""

import time

import numpy as np
import pytest

from hayami_backstepping import cli
from hayami_backstepping.analysis import certify
from hayami_backstepping.controller import control_law, tune_lambda
from hayami_backstepping.kernels import KERNEL_FORMS, solve_delta, solve_gamma
from hayami_backstepping.params import REFERENCE_CHANNEL, cfl_limit, effective_params, make_grid
from hayami_backstepping.simulator import convergence_study, run
from hayami_backstepping.transforms import (
    FlowState,
    check_inverse,
    forward_transform,
    physical_to_state,
    state_norm,
)

from conftest import ACCEPTANCE_LINES, constant_profile

_shared: dict = {}


def _report(number: int, title: str, passed: bool, detail: str) -> None:
    line = f"criterion {number} [{'PASS' if passed else 'FAIL'}] {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def test_criterion_1_kernel_correctness():
    start = time.perf_counter()
    worst_res = worst_bc = 0.0
    for mode in ("dimensional", "paper-literal"):
        ep = effective_params(REFERENCE_CHANNEL, mode)
        for lam in (0.001, 0.611):
            for form in KERNEL_FORMS:
                for k in (solve_gamma(ep, lam, form), solve_delta(ep, lam, form)):
                    worst_res = max(worst_res, k.residual(100))
                    y0, yp0, _ = k.sol.derivatives(0.0)
                    worst_bc = max(
                        worst_bc,
                        abs(float(y0) - k.sol.value0) / abs(k.sol.value0),
                        abs(float(yp0) - k.sol.slope0) / abs(k.sol.slope0),
                    )
    elapsed = time.perf_counter() - start
    ok = worst_res <= 1e-9 and worst_bc <= 1e-12 and elapsed < 1.0
    _report(1, "kernel ODE residuals", ok,
            f"max residual {worst_res:.2e} (<= 1e-9), max BC error {worst_bc:.2e} (<= 1e-12), "
            f"{elapsed:.3f} s (< 1 s)")
    assert ok


def test_criterion_2_scheme_verification(ep_dim):
    start = time.perf_counter()
    res = convergence_study(ep_dim, levels=(100, 200, 400), t_final=100.0, courant=0.4)
    elapsed = time.perf_counter() - start
    ratios = [a.l2_error / b.l2_error for a, b in zip(res, res[1:])]
    rel = res[-1].relative_l2
    ok = all(3.4 <= r <= 4.6 for r in ratios) and rel <= 1e-3 and elapsed < 30.0
    _report(2, "FTCS spatial convergence", ok,
            f"ratios {ratios[0]:.3f}, {ratios[1]:.3f} (in [3.4, 4.6]), relative L2 at N=400 "
            f"{rel:.2e} (<= 1e-3), {elapsed:.2f} s (< 30 s)")
    assert ok


def test_criterion_3_transform_invertibility(ep_dim, constant_ic_run):
    lam = constant_ic_run["tuned"].lam
    parts, ok = [], True
    for form in KERNEL_FORMS:
        rep = check_inverse(ep_dim, lam, form, resolutions=(200, 400), n_states=20)
        c, n = rep.closed_form_errors, rep.numerical_errors
        # a failing closed form must come with the discrepancy note
        form_ok = rep.closed_form_pass or (rep.numerical_pass and bool(rep.notes))
        ok &= form_ok
        used = "closed form" if rep.closed_form_pass else "numerical inverse (discrepancy reported)"
        parts.append(
            f"{form}: closed {c[0]:.2e}->{c[1]:.2e}, numerical {n[0]:.2e}->{n[1]:.2e}, uses {used}"
        )
        if form == "consistent":
            _shared["quadrature_scale"] = c[0]
    _report(3, f"inverse after forward at tuned lambda {lam:.6g}", ok, "; ".join(parts))
    assert ok


def test_criterion_4_target_boundary(ep_dim, constant_ic_run):
    if "quadrature_scale" not in _shared:
        test_criterion_3_transform_invertibility(ep_dim, constant_ic_run)
    scale = _shared["quadrature_scale"]
    rec, g, grid = constant_ic_run["record"], constant_ic_run["gamma"], constant_ic_run["grid"]
    w0 = w1 = 0.0
    ok = True
    for k in range(len(rec)):
        s = rec.state(k)
        w = forward_transform(s, g, grid).w
        w0 = max(w0, abs(w[0]))
        w1 = max(w1, abs(w[-1]))
        ok &= abs(w[0]) <= 1e-12 and abs(w[-1]) <= 5 * scale * state_norm(s)
    _report(4, "target-system boundary values", ok,
            f"max |w(0)| {w0:.2e} (<= 1e-12), max |w(1)| {w1:.2e} "
            f"(<= 5 x {scale:.2e} x state norm) over {len(rec)} snapshots")
    assert ok


def test_criterion_5_lyapunov_certification(constant_ic_run):
    start = time.perf_counter()
    r = constant_ic_run
    cert = certify(r["record"], r["gamma"], r["delta"], tol=0.05)
    _shared["cert_constant"] = cert
    elapsed = r["elapsed"] + time.perf_counter() - start
    mu = cert.config.mu
    ok = cert.lyapunov_pass and cert.gamma2_pass and cert.fitted_rate >= 0.9 * mu and elapsed < 60
    _report(5, "Lyapunov certificate, constant IC", ok,
            f"lyapunov_pass {cert.lyapunov_pass}, gamma2_pass {cert.gamma2_pass}, c1 "
            f"{cert.config.c1:.4g}, mu {mu:.3e}, fitted rate {cert.fitted_rate:.3e} "
            f"(>= {0.9 * mu:.3e}), {elapsed:.1f} s (< 60 s)")
    assert ok


def test_criterion_6_closed_loop_decay(constant_ic_run):
    rec = constant_ic_run["record"]
    q_final = float(np.max(np.abs(rec.q[-1])))
    z0, z1 = float(rec.z_weir[0]), float(rec.z_weir[-1])
    t_final = rec.metadata["t_final"]
    ok = q_final <= 0.01 * 0.15 and abs(z1) <= 0.01 * abs(z0) and t_final == rec.t[-1]
    _report(6, "closed-loop decay", ok,
            f"t_final {t_final:.1f} s, max|q| {q_final:.2e} (<= 1.5e-3), z_weir "
            f"{z0:.3g} -> {z1:.2e} ({abs(z1 / z0):.2%} of initial, <= 1%)")
    assert ok


@pytest.fixture(scope="module")
def gaussian_ic_run(ep_dim):
    N = 200
    grid = make_grid(ep_dim, N, 0.8 * cfl_limit(ep_dim, N), 3500.0, record_every=1800)

    def q0(x):
        return -0.1 + 0.3 * np.exp(-((np.asarray(x) - 400.0) ** 2) / (2 * 120.0**2))

    lam = tune_lambda(ep_dim, grid, q0).lam
    rec = run(ep_dim, grid, q0, lam)
    return rec, solve_gamma(ep_dim, lam), solve_delta(ep_dim, lam)


def test_criterion_7_sandwich_inequalities(constant_ic_run, gaussian_ic_run):
    r = constant_ic_run
    cert_c = _shared.get("cert_constant") or certify(r["record"], r["gamma"], r["delta"])
    cert_g = certify(*gaussian_ic_run)
    total = {k: cert_c.sandwich_violations[k] + cert_g.sandwich_violations[k]
             for k in cert_c.sandwich_violations}
    n = len(r["record"]) + len(gaussian_ic_run[0])
    ok = all(v == 0 for v in total.values())
    printed = cert_c.printed_violations["G1_le_m4_V"] + cert_g.printed_violations["G1_le_m4_V"]
    _report(7, "norm sandwich inequalities", ok,
            f"violations {total} over {n} snapshots (constant and Gaussian IC); "
            f"uncorrected m4 would be violated at {printed}")
    assert ok


def test_criterion_8_lambda_tuning(ep_dim, ep_lit):
    grid = make_grid(ep_dim, 200, 0.8 * cfl_limit(ep_dim, 200), 0.0)
    s = physical_to_state(constant_profile(), ep_dim, grid)
    worst = 0.0
    for planted in (0.0016, 0.05, 0.5, 2.0):
        u = s.u.copy()
        u[-1] = control_law(s, solve_gamma(ep_dim, planted), grid).U
        got = tune_lambda(ep_dim, grid, FlowState(u, s.X)).lam
        worst = max(worst, abs(got - planted))
    oracle_ok = worst <= 1e-3

    grid_lit = make_grid(ep_lit, 200, 1.0, 0.0)
    rows = []
    for form in KERNEL_FORMS:
        res = tune_lambda(ep_lit, grid_lit, constant_profile(), form=form)
        factor = res.lam / 0.001
        agree = 0.2 <= factor <= 5.0
        rows.append(f"{form} {res.lam:.6g} ({factor:.2f}x reported 0.001, "
                    f"{'within' if agree else 'outside'} factor 5, residual {res.residual:.1e})")
        if not agree:
            rows.append(f"residual curve min {np.min(np.abs(res.residuals)):.2e}")
    _report(8, "lambda tuning", oracle_ok,
            f"planted-lambda max error {worst:.2e} (<= 1e-3); paper-literal tuned: " + "; ".join(rows))
    assert oracle_ok


def _data_files(root):
    out = {}
    for p in sorted(root.rglob("*")):
        if p.is_file():
            lines = p.read_bytes().splitlines(keepends=True)
            if p.name == "metadata.txt" and lines and lines[0].startswith(b"# generated:"):
                lines = lines[1:]
            out[str(p.relative_to(root))] = b"".join(lines)
    return out


def test_criterion_9_determinism(tmp_path):
    conf = tmp_path / "det.conf"
    conf.write_text(
        "b = 1\nB0 = 7\nC0 = 20\nD0 = 1800\nL = 1000\nN = 60\n"
        "dt = 0.05\nt_final = 300\nrecord_every = 200\n"
        "ic.kind = gaussian-bump\nic.amplitude = 0.3\nic.offset = -0.1\n"
        "convergence.levels = 20,40\nconvergence.t_final = 20\n"
    )
    commands = ["simulate", "tune-lambda", "verify-kernels", "convergence", "certify"]
    trees = []
    for k in range(2):
        root = tmp_path / f"run{k}"
        for cmd in commands:
            code = cli.main([cmd, "--config", str(conf), "--out", str(root)])
            assert code in (0, 4)
        trees.append(_data_files(root))
    same = trees[0] == trees[1]
    ok = same and len(trees[0]) >= 7
    _report(9, "determinism", ok,
            f"{len(trees[0])} files from {len(commands)} subcommands byte-identical across two runs: "
            f"{same}")
    assert ok
