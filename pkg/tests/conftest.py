import numpy as np
import pytest

from hayami_backstepping.params import REFERENCE_CHANNEL, cfl_limit, effective_params, make_grid

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def ep_dim():
    return effective_params(REFERENCE_CHANNEL, "dimensional")


@pytest.fixture(scope="session")
def ep_lit():
    return effective_params(REFERENCE_CHANNEL, "paper-literal")


@pytest.fixture
def small_grid(ep_dim):
    return make_grid(ep_dim, 50, 0.8 * cfl_limit(ep_dim, 50), 10.0)


def constant_profile(value=0.15):
    return lambda x: np.full_like(np.asarray(x, dtype=float), value)


@pytest.fixture(scope="session")
def constant_ic_run(ep_dim):
    """Closed-loop constant-IC run at N = 200 with tuned lambda (shared, ~10 s)."""
    import time

    from hayami_backstepping.controller import tune_lambda
    from hayami_backstepping.kernels import solve_delta, solve_gamma
    from hayami_backstepping.simulator import run

    start = time.perf_counter()
    N = 200
    grid = make_grid(ep_dim, N, 0.8 * cfl_limit(ep_dim, N), 3500.0, record_every=1800)
    q0 = constant_profile()
    tuned = tune_lambda(ep_dim, grid, q0)
    record = run(ep_dim, grid, q0, tuned.lam)
    g = solve_gamma(ep_dim, tuned.lam)
    d = solve_delta(ep_dim, tuned.lam)
    return {
        "grid": grid,
        "tuned": tuned,
        "record": record,
        "gamma": g,
        "delta": d,
        "elapsed": time.perf_counter() - start,
    }


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
