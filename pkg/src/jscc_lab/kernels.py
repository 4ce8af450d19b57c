"""Batch kernels for the recursive quantizer and the fused simulation loop.

Every kernel exists twice: a ``*_jit`` version written as explicit loops and
compiled with numba, and a ``*_np`` version built from vectorized numpy
operations. ``quantize_batch`` and ``simulate_chunk`` dispatch to one of them
according to :data:`jscc_lab._jit.USE_NUMBA`.

Rounding follows the half-open convention ``Int(x) = i  iff  x in [i-1/2, i+1/2)``.
It is evaluated as ``floor(x) + (x - floor(x) >= 0.5)``; the subtraction is
exact in binary floating point, unlike ``floor(x + 0.5)`` which misrounds
0.49999999999999994.
"""

import math

import numpy as np

from ._jit import USE_NUMBA, njit

__all__ = [
    "STAT_SQERR",
    "STAT_SQERR2",
    "STAT_EE",
    "STAT_EE2",
    "n_stats",
    "stage_slot",
    "quantize_batch",
    "quantize_batch_np",
    "quantize_batch_jit",
    "simulate_chunk",
    "simulate_chunk_np",
    "simulate_chunk_jit",
]

# Layout of the per-chunk statistics vector.
STAT_SQERR = 0  # sum (S - S_hat)^2
STAT_SQERR2 = 1  # sum (S - S_hat)^4
STAT_EE = 2  # sum (E - E_hat)^2
STAT_EE2 = 3  # sum (E - E_hat)^4
_STAGE_BASE = 4
_PER_STAGE = 3  # sum (Q - Q_hat)^2, sum (Q - Q_hat)^4, symbol error count


def n_stats(n):
    return _STAGE_BASE + _PER_STAGE * (n - 1)


def stage_slot(i):
    """Index of the first statistic belonging to quantization stage ``i`` (0-based)."""
    return _STAGE_BASE + _PER_STAGE * i


# --------------------------------------------------------------------------
# numpy path


def _int_round_np(x):
    j = np.floor(x)
    return j + (x - j >= 0.5)


def quantize_batch_np(s, beta, stages):
    s = np.asarray(s, dtype=np.float64)
    idx = np.empty((stages,) + s.shape, dtype=np.float64)
    e = s.copy()
    for i in range(stages):
        t = beta * e
        j = _int_round_np(t)
        idx[i] = j
        # t - j is exact and lies in [-1/2, 1/2) by construction of j
        e = t - j
    return idx, e


def simulate_chunk_np(s, z, beta, n, step, gain_e, coef_e):
    stats = np.zeros(n_stats(n))
    idx, e_last = quantize_batch_np(s, beta, n - 1)
    if n > 1:
        q = idx / beta
        j_hat = _int_round_np((step * idx + z[: n - 1]) / step)
        q_hat = j_hat / beta
        eq = q - q_hat
        for i in range(n - 1):
            sq = eq[i] * eq[i]
            base = stage_slot(i)
            stats[base] = math.fsum(sq)
            stats[base + 1] = math.fsum(sq * sq)
            stats[base + 2] = float(np.count_nonzero(j_hat[i] != idx[i]))
    e_hat = coef_e * (gain_e * e_last + z[n - 1])
    # Horner form of the inverse recursion E_{i-1} = Q_i + E_i / beta
    s_hat = e_hat
    for i in range(n - 2, -1, -1):
        s_hat = q_hat[i] + s_hat / beta
    d2 = (s - s_hat) ** 2
    ee2 = (e_last - e_hat) ** 2
    stats[STAT_SQERR] = math.fsum(d2)
    stats[STAT_SQERR2] = math.fsum(d2 * d2)
    stats[STAT_EE] = math.fsum(ee2)
    stats[STAT_EE2] = math.fsum(ee2 * ee2)
    return stats


# --------------------------------------------------------------------------
# numba path


@njit
def _int_round_jit(x):
    j = math.floor(x)
    if x - j >= 0.5:
        j += 1.0
    return j


@njit
def _add(acc, comp, k, v):
    # Neumaier compensated summation
    t = acc[k] + v
    if abs(acc[k]) >= abs(v):
        comp[k] += (acc[k] - t) + v
    else:
        comp[k] += (v - t) + acc[k]
    acc[k] = t


@njit
def quantize_batch_jit(s, beta, stages):
    m = s.shape[0]
    idx = np.empty((stages, m))
    e_out = np.empty(m)
    for k in range(m):
        e = s[k]
        for i in range(stages):
            t = beta * e
            j = _int_round_jit(t)
            idx[i, k] = j
            e = t - j
        e_out[k] = e
    return idx, e_out


@njit
def simulate_chunk_jit(s, z, beta, n, step, gain_e, coef_e):
    m = s.shape[0]
    ns = 4 + 3 * (n - 1)
    acc = np.zeros(ns)
    comp = np.zeros(ns)
    q_hat = np.empty(max(n - 1, 1))
    for k in range(m):
        e = s[k]
        for i in range(n - 1):
            t = beta * e
            j = _int_round_jit(t)
            e = t - j
            y = step * j + z[i, k]
            j_hat = _int_round_jit(y / step)
            q_hat[i] = j_hat / beta
            dq = j / beta - q_hat[i]
            dq2 = dq * dq
            base = 4 + 3 * i
            _add(acc, comp, base, dq2)
            _add(acc, comp, base + 1, dq2 * dq2)
            if j_hat != j:
                acc[base + 2] += 1.0
        e_hat = coef_e * (gain_e * e + z[n - 1, k])
        s_hat = e_hat
        for i in range(n - 2, -1, -1):
            s_hat = q_hat[i] + s_hat / beta
        d = s[k] - s_hat
        d2 = d * d
        _add(acc, comp, 0, d2)
        _add(acc, comp, 1, d2 * d2)
        de = e - e_hat
        de2 = de * de
        _add(acc, comp, 2, de2)
        _add(acc, comp, 3, de2 * de2)
    return acc + comp


# --------------------------------------------------------------------------
# dispatch


def quantize_batch(s, beta, stages):
    """Run ``stages`` quantizer stages on every entry of ``s``.

    Returns ``(idx, e_last)`` where ``idx[i]`` holds the integer index of
    stage ``i + 1`` (so ``Q_{i+1} = idx[i] / beta``) and ``e_last`` is the
    final residual.
    """
    s = np.asarray(s, dtype=np.float64)
    if USE_NUMBA and s.ndim == 1:
        return quantize_batch_jit(np.ascontiguousarray(s), float(beta), int(stages))
    return quantize_batch_np(s, float(beta), int(stages))


def simulate_chunk(s, z, beta, n, step, gain_e, coef_e):
    """Encode, transmit and decode one chunk; return its accumulated statistics.

    ``z`` has shape ``(n, len(s))``. ``step`` is the spacing of the transmitted
    quantization lattice, ``gain_e`` the amplitude applied to the residual and
    ``coef_e`` the scalar LMMSE gain applied to the last channel output.
    """
    s = np.ascontiguousarray(s, dtype=np.float64)
    z = np.ascontiguousarray(z, dtype=np.float64)
    args = (float(beta), int(n), float(step), float(gain_e), float(coef_e))
    if USE_NUMBA:
        return simulate_chunk_jit(s, z, *args)
    return simulate_chunk_np(s, z, *args)
