"""Minimal-delay joint source-channel coding by recursive quantization.

A Gaussian source letter is quantized, the quantization error is rescaled and
quantized again, and so on for ``n - 1`` stages; the quantization symbols go
over the first ``n - 1`` uses of an AWGN channel and the final residual is sent
uncoded on the last one. The package provides the codec, closed-form error
expressions, a reproducible Monte Carlo harness and a ``jscc-lab sweep`` CLI.
"""

from ._jit import USE_NUMBA
from .analysis import (
    BoundCurvePoint,
    SlopeFit,
    baseline_uncoded_repetition,
    err_e_exact,
    err_q_bound,
    err_q_exact_series,
    fit_scaling_exponent,
    opta_sdr,
    q_function,
    symbol_error_prob,
    total_mse_bound,
)
from .codec import (
    ChannelBlock,
    DecodedBlock,
    EncodedBlock,
    decode,
    decode_e,
    decode_q,
    encode,
    int_round,
    quantize_stage,
    reconstruct,
)
from .model import (
    BetaSchedule,
    SchemeParams,
    SweepGrid,
    ValidationError,
    ScheduleDomainError,
    beta_from_schedule,
    calibrate_sigma_e2,
    calibrated,
    epsilon_schedule,
    k_constant,
)
from .montecarlo import ErrorBreakdown, RngStream, awgn_channel, empirical_var_qi, simulate_point, sweep

__version__ = "0.1.0"

__all__ = [
    "USE_NUMBA",
    "BoundCurvePoint",
    "SlopeFit",
    "baseline_uncoded_repetition",
    "err_e_exact",
    "err_q_bound",
    "err_q_exact_series",
    "fit_scaling_exponent",
    "opta_sdr",
    "q_function",
    "symbol_error_prob",
    "total_mse_bound",
    "ChannelBlock",
    "DecodedBlock",
    "EncodedBlock",
    "decode",
    "decode_e",
    "decode_q",
    "encode",
    "int_round",
    "quantize_stage",
    "reconstruct",
    "BetaSchedule",
    "SchemeParams",
    "SweepGrid",
    "ValidationError",
    "ScheduleDomainError",
    "beta_from_schedule",
    "calibrate_sigma_e2",
    "calibrated",
    "epsilon_schedule",
    "k_constant",
    "ErrorBreakdown",
    "RngStream",
    "awgn_channel",
    "empirical_var_qi",
    "simulate_point",
    "sweep",
]
