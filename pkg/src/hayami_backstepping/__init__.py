"""Backstepping boundary control of open-channel flow (Hayami model)."""

from .analysis import certify, decay_rate_mu, lyapunov_config, norm_constants
from .controller import control_law, tune_lambda
from .kernels import solve_delta, solve_gamma
from .params import REFERENCE_CHANNEL, ChannelParams, effective_params, make_grid
from .simulator import run, run_verification, simulate, step
from .transforms import forward_transform, inverse_transform, physical_to_state

__all__ = [
    "REFERENCE_CHANNEL",
    "ChannelParams",
    "certify",
    "control_law",
    "decay_rate_mu",
    "effective_params",
    "forward_transform",
    "inverse_transform",
    "lyapunov_config",
    "make_grid",
    "norm_constants",
    "physical_to_state",
    "run",
    "run_verification",
    "simulate",
    "step",
    "solve_delta",
    "solve_gamma",
    "tune_lambda",
]

__version__ = "0.1.0"
