"""Closed-form error expressions, bounds and reference SDR curves."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
from scipy import special

from .model import SchemeParams, implied_epsilon

__all__ = [
    "BoundCurvePoint",
    "SlopeFit",
    "DivergenceError",
    "q_function",
    "symbol_error_prob",
    "err_q_bound",
    "err_q_exact_series",
    "err_e_exact",
    "total_mse_bound",
    "opta_sdr",
    "fit_scaling_exponent",
    "baseline_uncoded_repetition",
]


class DivergenceError(ArithmeticError):
    pass


@dataclass(frozen=True)
class BoundCurvePoint:
    snr: float
    beta: float
    epsilon: float
    err_q_bound: float
    err_e_exact: float
    total_mse_bound: float
    opta_sdr: float
    p_symbol_error: float


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    r_squared: float
    snr_range_db: Tuple[float, float]


def q_function(x):
    """Standard normal tail probability ``P[N(0,1) > x]``."""
    out = 0.5 * special.erfc(np.asarray(x, dtype=np.float64) / math.sqrt(2.0))
    return float(out) if out.ndim == 0 else out


def _lattice_arg(snr, beta, sigma_s2, delta):
    # noise-to-lattice ratio: half-spacing crossing happens at |Z|/sigma_z = a/2
    return math.sqrt(snr) / (beta * math.sqrt(sigma_s2 + delta))


def symbol_error_prob(snr, beta, sigma_s2, delta):
    """Probability that the minimum-distance decoder misses a quantization symbol.

    Exact for the half-open decision regions used by the decoder.
    """
    return 2.0 * q_function(_lattice_arg(snr, beta, sigma_s2, delta) / 2.0)


def _geom_j2(p):
    # sum_{j>=1} j^2 p^j
    return (p * p + p) / (1.0 - p) ** 3


def _geom_j2_tail(p, j0):
    # sum_{j>j0} j^2 p^j, in closed form without cancellation
    m = j0 + 1
    return p**m * (m * m / (1.0 - p) + 2.0 * m * p / (1.0 - p) ** 2 + _geom_j2(p))


def err_q_bound(snr, beta, sigma_s2, delta):
    """Two-term upper bound on the symbol-error MSE, without the ``1/beta^2`` factor.

    ``exp(-a^2/8) + sum_{j>=1} j^2 p^j`` with ``a^2 = snr / (beta^2 (sigma_s2+delta))``
    and ``p = exp(-a^2/2)``. Multiply by ``1/beta^2`` for the tighter form
    used in :func:`total_mse_bound`.
    """
    a2 = snr / (beta * beta * (sigma_s2 + delta))
    p = math.exp(-a2 / 2.0)
    if not p < 1.0:
        raise DivergenceError(f"geometric ratio p = {p!r} ≥ 1; snr must be positive")
    return math.exp(-a2 / 8.0) + _geom_j2(p)


def err_q_exact_series(snr, beta, sigma_s2, delta, j_max=64):
    """Truncated exact symbol-error MSE ``E[(Q - Q_hat)^2]`` and a bound on the tail.

    Returns ``(value, tail_bound)``; the true value lies in
    ``[value, value + tail_bound]``.
    """
    if j_max < 1:
        raise ValueError("j_max must be ≥ 1")
    a = _lattice_arg(snr, beta, sigma_s2, delta)
    j = np.arange(1, j_max + 1, dtype=np.float64)
    # Q((j-1/2)a) - Q((j+1/2)a), evaluated as a difference of upper tails
    probs = q_function((j - 0.5) * a) - q_function((j + 0.5) * a)
    value = 2.0 / beta**2 * math.fsum(j * j * probs)
    # for j ≥ 2, (j - 1/2)^2 ≥ j turns the Gaussian tail bound into a geometric one
    p = math.exp(-a * a / 2.0)
    tail = math.inf if p >= 1.0 else _geom_j2_tail(p, j_max) / beta**2
    return value, tail


def err_e_exact(sigma_e2, snr):
    """LMMSE error of the uncoded residual, ``sigma_e2 / (1 + snr)``."""
    return sigma_e2 / (1.0 + snr)


def opta_sdr(snr, n):
    return (1.0 + snr) ** n


def baseline_uncoded_repetition(snr, n):
    """SDR of sending the source uncoded ``n`` times with LMMSE combining."""
    return 1.0 + n * snr


def total_mse_bound(params: SchemeParams) -> BoundCurvePoint:
    """Upper bound on the end-to-end MSE assembled stage by stage.

    Each quantization stage contributes ``err_q_bound / beta^2`` (the prefactor
    that survives the Gaussian tail bound), weighted by ``beta^(-2(i-1))``; the
    residual contributes the exact LMMSE error weighted by ``beta^(-2(n-1))``.
    """
    n, beta, snr = params.n, params.beta, params.snr()
    e_exact = err_e_exact(params.residual_var, snr)
    if n == 1:
        q_bound = 0.0
        p_err = 0.0
    else:
        q_bound = err_q_bound(snr, beta, params.sigma_s2, params.delta) / beta**2
        p_err = symbol_error_prob(snr, beta, params.sigma_s2, params.delta)
    b2 = beta * beta
    total = math.fsum([q_bound / b2**i for i in range(n - 1)] + [e_exact / b2 ** (n - 1)])
    eps = implied_epsilon(snr, beta) if snr > 1 else math.nan
    return BoundCurvePoint(
        snr=snr,
        beta=beta,
        epsilon=eps,
        err_q_bound=q_bound,
        err_e_exact=e_exact,
        total_mse_bound=total,
        opta_sdr=opta_sdr(snr, n),
        p_symbol_error=p_err,
    )


def fit_scaling_exponent(points: Sequence[Tuple[float, float]]) -> SlopeFit:
    """Least-squares slope of ``ln sdr`` against ``ln snr``."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] < 3 or pts.shape[1] != 2:
        raise ValueError("need at least 3 (snr, sdr) points")
    snr, sdr = pts[:, 0], pts[:, 1]
    if np.any(snr <= 0) or np.any(sdr <= 0):
        raise ValueError("snr and sdr must be positive")
    if np.unique(snr).size != snr.size:
        raise np.linalg.LinAlgError("duplicate snr values make the fit rank deficient")
    x, y = np.log(snr), np.log(sdr)
    xc = x - x.mean()
    yc = y - y.mean()
    sxx = float(xc @ xc)
    slope = float(xc @ yc) / sxx
    intercept = float(y.mean() - slope * x.mean())
    syy = float(yc @ yc)
    r2 = 1.0 if syy == 0.0 else min(1.0, max(0.0, slope * slope * sxx / syy))
    db = 10.0 * np.log10(snr)
    return SlopeFit(slope, intercept, r2, (float(db.min()), float(db.max())))
