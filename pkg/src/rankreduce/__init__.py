"""Jointly optimized reduced-rank adaptive filtering.

The package keeps a tall projection matrix and a short filter, adapts both
with exponentially weighted recursive least squares, and ships a DS-CDMA
space-time Monte-Carlo harness plus a config-driven CLI for bit-error-rate
experiments. Hot per-symbol kernels run compiled when the extension built,
with a NumPy fallback selected at import (see `backend_name`).
"""

from ._backend import backend_name
from .cdma import (
    ChannelProcess,
    ConvolutionMatrices,
    ScenarioParams,
    Snapshot,
    TrialResult,
    TrialScenario,
    build_convolution_matrices,
    build_scenario,
    draw_channel,
    gen_channel,
    gen_signatures,
    hard_decision,
    output_sinr,
    received_vector,
    run_ber_trial,
)
from .estimation import (
    Correlation,
    ReducedCorrelation,
    SampleHistory,
    accumulate_correlation,
    alternating_ls,
    batch_projection,
    batch_reduced_weights,
    hermitize,
    ls_cost,
    reduce_correlation,
    ses,
    truncation_basis,
)
from .exceptions import ConfigError, NumericalError, TrialError
from .experiment import (
    ResultRow,
    SimConfig,
    config_echo_lines,
    parse_config,
    run_convergence,
    run_rank_sweep,
    write_csv,
)
from .rls import (
    FullRankState,
    JioState,
    StepOutput,
    count_step_operations,
    effective_weights,
    full_rank_init,
    full_rank_rls_step,
    jio_init,
    jio_step,
    project,
    projection_gain,
    projection_update,
    reduced_gain,
    reduced_update,
    weight_gain_update,
)

__version__ = "0.1.0"

__all__ = [
    "ChannelProcess",
    "ConfigError",
    "ConvolutionMatrices",
    "Correlation",
    "FullRankState",
    "JioState",
    "NumericalError",
    "ReducedCorrelation",
    "ResultRow",
    "SampleHistory",
    "ScenarioParams",
    "SimConfig",
    "Snapshot",
    "StepOutput",
    "TrialError",
    "TrialResult",
    "TrialScenario",
    "accumulate_correlation",
    "alternating_ls",
    "backend_name",
    "batch_projection",
    "batch_reduced_weights",
    "build_convolution_matrices",
    "build_scenario",
    "config_echo_lines",
    "count_step_operations",
    "draw_channel",
    "effective_weights",
    "full_rank_init",
    "full_rank_rls_step",
    "gen_channel",
    "gen_signatures",
    "hard_decision",
    "hermitize",
    "jio_init",
    "jio_step",
    "ls_cost",
    "output_sinr",
    "parse_config",
    "project",
    "projection_gain",
    "projection_update",
    "received_vector",
    "reduce_correlation",
    "reduced_gain",
    "reduced_update",
    "run_ber_trial",
    "run_convergence",
    "run_rank_sweep",
    "ses",
    "truncation_basis",
    "weight_gain_update",
    "write_csv",
]
