import math

import numpy as np
import pytest

from hayami_backstepping.controller import control_law
from hayami_backstepping.kernels import solve_gamma
from hayami_backstepping.params import Grid, cfl_limit, make_grid
from hayami_backstepping.simulator import (
    NumericalInstability,
    convergence_study,
    exact_decay,
    run_verification,
    simulate,
    step,
)
from hayami_backstepping.transforms import FlowState, random_compatible_state


def _scalar_step(u, X, ep, lam, dt, dx):
    """Plain-loop reference of one closed-loop explicit step."""
    N = len(u) - 1
    D, beta = ep.D, ep.boundary_gain
    new = [0.0] * (N + 1)
    for i in range(1, N):
        new[i] = u[i] + D * dt / dx**2 * (u[i + 1] - 2 * u[i] + u[i - 1]) - dt * ep.reaction * u[i]
    Xn = X + dt * (-ep.drift * X + (u[1] - beta * X) / dx)
    new[0] = beta * Xn
    g = solve_gamma(ep, lam)
    acc = g(1.0) * Xn
    for i in range(N):
        acc += dx * g(1.0 - i * dx) / D * new[i]
    new[N] = acc
    return new, Xn


def test_zero_is_fixed_point(ep_dim, small_grid):
    g = solve_gamma(ep_dim, 0.01)
    rec = simulate(FlowState(np.zeros(51), 0.0), g, small_grid)
    assert np.all(rec.u == 0.0)
    assert np.all(rec.X == 0.0)
    assert np.all(rec.U == 0.0)


def test_single_step_matches_scalar_loop(ep_dim):
    grid = make_grid(ep_dim, 8, 0.8 * cfl_limit(ep_dim, 8), 1.0)
    s = random_compatible_state(ep_dim, grid, np.random.default_rng(3))
    g = solve_gamma(ep_dim, 0.2)
    out = step(s, g, grid)
    ref_u, ref_X = _scalar_step(list(s.u), s.X, ep_dim, 0.2, grid.dt, grid.dx)
    assert out.X == pytest.approx(ref_X, rel=1e-13)
    np.testing.assert_allclose(out.u, ref_u, rtol=1e-12, atol=1e-15 * abs(s.X))
    assert out.t == pytest.approx(grid.dt)


def test_simulate_agrees_with_step(ep_dim, small_grid):
    s = random_compatible_state(ep_dim, small_grid, np.random.default_rng(4))
    g = solve_gamma(ep_dim, 0.05)
    grid = Grid(N=50, dt=small_grid.dt, t_final=7 * small_grid.dt, record_every=1)
    rec = simulate(s, g, grid)
    cur = s
    for k in range(1, 8):
        cur = step(cur, g, grid)
        np.testing.assert_allclose(rec.u[k], cur.u, rtol=1e-12, atol=1e-18)
        assert rec.X[k] == pytest.approx(cur.X, rel=1e-12)


def test_superposition(ep_dim, small_grid):
    rng = np.random.default_rng(5)
    s1 = random_compatible_state(ep_dim, small_grid, rng)
    s2 = random_compatible_state(ep_dim, small_grid, rng)
    g = solve_gamma(ep_dim, 0.05)
    r1 = simulate(s1, g, small_grid)
    r2 = simulate(s2, g, small_grid)
    r12 = simulate(FlowState(2 * s1.u - s2.u, 2 * s1.X - s2.X), g, small_grid)
    scale = np.max(np.abs(r1.u)) + np.max(np.abs(r2.u))
    np.testing.assert_allclose(r12.u, 2 * r1.u - r2.u, atol=1e-12 * scale)


def test_boundary_relations_hold_every_snapshot(ep_dim, small_grid):
    s = random_compatible_state(ep_dim, small_grid, np.random.default_rng(6))
    g = solve_gamma(ep_dim, 0.05)
    rec = simulate(s, g, small_grid)
    np.testing.assert_allclose(rec.u[:, 0], ep_dim.boundary_gain * rec.X, rtol=1e-14)
    for k in range(1, len(rec)):
        st = rec.state(k)
        assert rec.U[k] == pytest.approx(control_law(st, g, small_grid).U, rel=1e-12)
        assert rec.u[k, -1] == rec.U[k]


def test_recording_schedule(ep_dim):
    grid = Grid(N=20, dt=0.5 * cfl_limit(ep_dim, 20), t_final=0.0)
    grid = Grid(N=20, dt=grid.dt, t_final=23 * grid.dt, record_every=5)
    s = random_compatible_state(ep_dim, grid, np.random.default_rng(7))
    rec = simulate(s, solve_gamma(ep_dim, 0.1), grid)
    steps = np.round(rec.t / grid.dt).astype(int)
    assert list(steps) == [0, 5, 10, 15, 20, 23]
    assert rec.metadata["n_steps"] == 23
    assert rec.q.shape == rec.u.shape


def test_open_loop_holds_actuated_end_at_zero(ep_dim, small_grid):
    s = random_compatible_state(ep_dim, small_grid, np.random.default_rng(8))
    rec = simulate(s, solve_gamma(ep_dim, 0.1), small_grid, control=False)
    assert np.all(rec.u[1:, -1] == 0.0)
    assert rec.metadata["control"] is False


def test_instability_raises(ep_dim):
    grid = Grid(N=40, dt=3.0 * cfl_limit(ep_dim, 40), t_final=1e6, record_every=50)
    s = random_compatible_state(ep_dim, grid, np.random.default_rng(9))
    with pytest.raises(NumericalInstability) as info:
        simulate(s, solve_gamma(ep_dim, 0.1), grid)
    assert info.value.t > 0


def test_node_count_mismatch(ep_dim, small_grid):
    with pytest.raises(ValueError):
        simulate(FlowState(np.zeros(10), 0.0), solve_gamma(ep_dim, 0.1), small_grid)


def test_verification_exact_amplitude(ep_dim):
    # frozen from an independent high-precision evaluation
    assert exact_decay(ep_dim, 100.0) == pytest.approx(6.54208566875975e-4, rel=1e-13)


def test_verification_small_error(ep_dim):
    res = run_verification(ep_dim, Grid(N=200, dt=0.4 / 200**2 / ep_dim.D, t_final=100.0))
    assert res.relative_l2 < 1e-2
    assert res.max_error < 1e-2 * res.amplitude


def test_convergence_is_second_order(ep_dim):
    res = convergence_study(ep_dim, levels=(50, 100, 200), t_final=100.0)
    assert len({round(r.t_final, 9) for r in res}) == 1
    for coarse, fine in zip(res, res[1:]):
        assert 3.4 <= coarse.l2_error / fine.l2_error <= 4.6


def test_first_order_in_time_at_fixed_space(ep_dim):
    """Halving dt at fixed N: self-convergence ratio near 2."""
    N, t_end = 20, 200.0
    dts = [0.4 / N**2 / ep_dim.D / 2**k for k in range(3)]
    sols = []
    for dt in dts:
        n = round(t_end / dts[0]) * round(dts[0] / dt)
        g = Grid(N=N, dt=dt, t_final=n * dt)
        x = g.x
        u = np.sin(np.pi * x)
        new = np.zeros_like(u)
        r, react = ep_dim.D * dt / g.dx**2, dt * ep_dim.reaction
        for _ in range(n):
            new[1:-1] = u[1:-1] + r * (u[2:] - 2 * u[1:-1] + u[:-2]) - react * u[1:-1]
            u, new = new, u
        sols.append(u.copy())
    # same spatial grid, so differences isolate the time error
    ratio = np.max(np.abs(sols[0] - sols[1])) / np.max(np.abs(sols[1] - sols[2]))
    assert 1.8 <= ratio <= 2.2


def test_one_step_local_error(ep_dim):
    """A single FTCS step on a smooth mode: defect O(dt^2 + dt dx^2)."""
    errs = []
    for N in (40, 80):
        dt = 0.4 / N**2 / ep_dim.D
        res = run_verification(ep_dim, Grid(N=N, dt=dt, t_final=dt))
        errs.append(res.max_error)
    # dt scales as dx^2, so local error falls by about 16
    assert 12 <= errs[0] / errs[1] <= 20


def test_closed_loop_decays(constant_ic_run):
    rec = constant_ic_run["record"]
    assert np.max(np.abs(rec.q[-1])) < 1.5e-3
    assert abs(rec.z_weir[-1]) < abs(rec.z_weir[0])
    assert math.isclose(rec.t[-1], 3500.0, abs_tol=rec.grid.dt)
