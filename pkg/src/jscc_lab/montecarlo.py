"""AWGN channel, sharded end-to-end simulation and SNR sweeps.

Samples are split into fixed-size chunks. Chunk ``c`` draws its source letters
and noise from ``RngStream(seed, c)`` and is reduced to a vector of sums by the
fused kernel. Worker ``w`` handles the chunks with ``c % workers == w``; the
per-chunk sums are then combined with :func:`math.fsum`, which is exactly
rounded, so the result is bit-identical for any number of workers.

Squared errors are heavy tailed at moderate SNR (a single symbol error costs
``1/beta^2``), so the normal-theory confidence intervals reported here are only
trustworthy when the expected number of symbol errors is large or negligible.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from . import analysis
from .codec import ChannelBlock, encode
from .kernels import (
    STAT_EE,
    STAT_EE2,
    STAT_SQERR,
    STAT_SQERR2,
    n_stats,
    quantize_batch,
    simulate_chunk,
    stage_slot,
)
from .model import (
    PILOT_STREAM_BASE,
    BetaSchedule,
    SchemeParams,
    SweepGrid,
    ValidationError,
    beta_from_schedule,
    calibrated,
    epsilon_schedule,
    implied_epsilon,
)
from .rng import RngStream

__all__ = [
    "RngStream",
    "ErrorBreakdown",
    "SweepPoint",
    "SweepResult",
    "CalibrationMissingError",
    "awgn_channel",
    "simulate_point",
    "sweep",
    "empirical_var_qi",
    "CHUNK_SIZE",
]

log = logging.getLogger(__name__)

CHUNK_SIZE = 1 << 16
Z95 = 1.959963984540054


class CalibrationMissingError(ValidationError):
    pass


@dataclass(frozen=True)
class ErrorBreakdown:
    err_q: List[float]
    err_e: float
    mse: float
    sdr: float
    symbol_error_rates: List[float]
    ci_halfwidth_mse: float
    samples: int
    # standard errors of the per-component means, for n-sigma comparisons
    err_q_se: List[float] = field(default_factory=list)
    err_e_se: float = 0.0

    @property
    def mse_se(self):
        return self.ci_halfwidth_mse / Z95

    @property
    def sdr_ci(self):
        lo_mse = self.mse - self.ci_halfwidth_mse
        high = self.sdr * self.mse / lo_mse if lo_mse > 0 else math.inf
        return self.sdr * self.mse / (self.mse + self.ci_halfwidth_mse), high


def awgn_channel(x, sigma_z2, rng):
    """Add iid ``N(0, sigma_z2)`` noise to every entry of ``x``.

    ``rng`` is an :class:`RngStream` or a :class:`numpy.random.Generator`.
    """
    if sigma_z2 < 0:
        raise ValueError("sigma_z2 must be nonnegative")
    x = np.asarray(x, dtype=np.float64)
    if sigma_z2 == 0:
        return ChannelBlock(x.copy())
    if isinstance(rng, RngStream):
        rng = rng.generator()
    return ChannelBlock(x + math.sqrt(sigma_z2) * rng.standard_normal(x.shape))


def _chunk_bounds(samples, chunk_size):
    n_chunks = -(-samples // chunk_size)
    return [(c, min(chunk_size, samples - c * chunk_size)) for c in range(n_chunks)]


def _draw(params, seed, chunk, m, noise_std):
    g = RngStream(seed, chunk).generator()
    s = math.sqrt(params.sigma_s2) * g.standard_normal(m)
    z = noise_std * g.standard_normal((params.n, m))
    return s, z


def _mean_se(total, total_sq, count):
    mean = total / count
    if count < 2:
        return mean, math.inf
    var = max(total_sq - count * mean * mean, 0.0) / (count - 1)
    return mean, math.sqrt(var / count)


def simulate_point(
    params: SchemeParams,
    samples: int,
    seed: int = 0,
    workers: int = 1,
    *,
    chunk_size: int = CHUNK_SIZE,
    channel_noise_var: Optional[float] = None,
) -> ErrorBreakdown:
    """Run ``samples`` source letters through encoder, AWGN channel and decoder.

    ``channel_noise_var`` overrides the variance of the noise actually added
    on the channel (the decoder still assumes ``params.sigma_z2``); pass 0 for
    a noiseless channel.
    """
    if samples < 1000:
        raise ValidationError("samples must be ≥ 10^3")
    if params.n >= 2 and params.sigma_e2 is None:
        raise CalibrationMissingError("sigma_e2 was never calibrated; see model.calibrate_sigma_e2")
    noise_var = params.sigma_z2 if channel_noise_var is None else channel_noise_var
    noise_std = math.sqrt(noise_var)
    kernel_args = (params.beta, params.n, params.grid_step, params.gain_e, params.lmmse_coef)

    chunks = _chunk_bounds(int(samples), int(chunk_size))
    stats = np.zeros((len(chunks), n_stats(params.n)))

    def run_shard(w):
        for c, m in chunks[w::workers]:
            s, z = _draw(params, seed, c, m, noise_std)
            stats[c] = simulate_chunk(s, z, *kernel_args)

    workers = max(1, min(int(workers), len(chunks)))
    if workers == 1:
        run_shard(0)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run_shard, range(workers)))

    total = [math.fsum(col) for col in stats.T]
    N = int(samples)
    mse, mse_se = _mean_se(total[STAT_SQERR], total[STAT_SQERR2], N)
    err_e, err_e_se = _mean_se(total[STAT_EE], total[STAT_EE2], N)
    err_q, err_q_se, ser = [], [], []
    for i in range(params.n - 1):
        b = stage_slot(i)
        m_i, se_i = _mean_se(total[b], total[b + 1], N)
        err_q.append(m_i)
        err_q_se.append(se_i)
        ser.append(total[b + 2] / N)
    return ErrorBreakdown(
        err_q=err_q,
        err_e=err_e,
        mse=mse,
        sdr=params.sigma_s2 / mse if mse > 0 else math.inf,
        symbol_error_rates=ser,
        ci_halfwidth_mse=Z95 * mse_se,
        samples=N,
        err_q_se=err_q_se,
        err_e_se=err_e_se,
    )


def empirical_var_qi(params, samples, seed=0):
    """Sample variances of ``Q_1 .. Q_{n-1}`` from the noiseless encoder."""
    if samples < 10_000:
        raise ValidationError("samples must be ≥ 10^4")
    g = RngStream(seed, PILOT_STREAM_BASE + 1).generator()
    s = math.sqrt(params.sigma_s2) * g.standard_normal(int(samples))
    idx, _ = quantize_batch(s, params.beta, params.n - 1)
    return [float(np.var(row / params.beta, ddof=1)) for row in idx]


@dataclass(frozen=True)
class SweepPoint:
    snr_db: float
    params: SchemeParams
    epsilon: float
    bound: analysis.BoundCurvePoint
    breakdown: ErrorBreakdown
    beta_clamped: bool = False

    def __iter__(self):
        return iter((self.bound, self.breakdown))


@dataclass(frozen=True)
class SweepResult:
    points: List[SweepPoint]
    failures: List[Tuple[float, str]]

    @property
    def ok(self):
        return not self.failures


def _schedule_epsilon(schedule, snr, beta, n, k):
    if schedule.kind == "fixed_epsilon":
        return schedule.epsilon
    if schedule.kind == "adaptive":
        return epsilon_schedule(snr, n, k)
    return implied_epsilon(snr, beta) if snr > 1 else math.nan


def sweep(
    grid: SweepGrid,
    base_params: SchemeParams,
    schedule: BetaSchedule,
    pilot_samples: int = 1_000_000,
) -> SweepResult:
    """Simulate every grid point with beta and sigma_e2 recomputed per SNR.

    All points share the same seed, so neighbouring SNRs see the same source
    draws and noise shapes (common random numbers), which smooths slope fits.
    Points whose schedule is undefined are recorded in ``failures`` and skipped.
    """
    points, failures = [], []
    n, k = base_params.n, base_params.k_const
    for snr_db in grid.snr_db_points:
        t0 = time.perf_counter()
        snr = 10.0 ** (snr_db / 10.0)
        try:
            beta, clamped = beta_from_schedule(snr, schedule, n, k, return_clamped=True)
            eps = _schedule_epsilon(schedule, snr, beta, n, k)
            params = base_params.replace(power=snr * base_params.sigma_z2, beta=beta, sigma_e2=None)
            params = calibrated(params, pilot_samples, grid.seed)
            bd = simulate_point(params, grid.samples_per_point, grid.seed, grid.workers)
            bound = analysis.total_mse_bound(params)
        except (ValueError, ArithmeticError, RuntimeError) as exc:
            log.warning("snr %.6g dB skipped: %s", snr_db, exc)
            failures.append((snr_db, str(exc)))
            continue
        points.append(SweepPoint(snr_db, params, eps, bound, bd, clamped))
        log.info(
            "snr %6.2f dB  beta %-10.5g sdr %-12.6g (%.2f dB)  %.2fs",
            snr_db,
            beta,
            bd.sdr,
            10 * math.log10(bd.sdr),
            time.perf_counter() - t0,
        )
    return SweepResult(points, failures)


def encode_transmit(params, s, rng):
    """Convenience: encode ``s`` and pass it through the channel."""
    block = encode(s, params)
    return block, awgn_channel(block.x, params.sigma_z2, rng)
