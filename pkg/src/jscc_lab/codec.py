"""Recursive-quantization encoder and the two-part decoder.

Functions accept a scalar source letter or an array of them. Arrays carry the
stage along the leading axis: ``q[i]`` is ``Q_{i+1}`` for every sample and
``x[i]`` is channel input ``X_{i+1}``.
"""

from dataclasses import dataclass

import numpy as np

from .kernels import quantize_batch

__all__ = [
    "EncodedBlock",
    "DecodedBlock",
    "ChannelBlock",
    "int_round",
    "quantize_stage",
    "encode",
    "reconstruct",
    "decode_q",
    "decode_e",
    "decode",
]


@dataclass(frozen=True)
class EncodedBlock:
    q: np.ndarray
    e_last: np.ndarray
    x: np.ndarray


@dataclass(frozen=True)
class DecodedBlock:
    q_hat: np.ndarray
    e_hat: np.ndarray
    s_hat: np.ndarray


@dataclass(frozen=True)
class ChannelBlock:
    y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "y", np.asarray(self.y, dtype=np.float64))


def int_round(x):
    """The integer ``i`` with ``i - 1/2 <= x < i + 1/2``.

    Exact half-integers round up. Scalars give a Python ``int``; arrays give a
    float array holding integer values.
    """
    x = np.asarray(x, dtype=np.float64)
    j = np.floor(x)
    j = j + (x - j >= 0.5)
    if j.ndim == 0:
        return int(j)
    return j


def quantize_stage(e_prev, beta):
    """One encoder stage: ``(Q, E)`` with ``Q = Int(beta e_prev) / beta``, ``E = beta (e_prev - Q)``.

    ``E`` is computed as ``beta*e_prev - Int(beta*e_prev)``, which is exact
    once the product is formed and therefore always lands in [-1/2, 1/2).
    """
    t = beta * np.asarray(e_prev, dtype=np.float64)
    j = np.floor(t)
    j = j + (t - j >= 0.5)
    q, e = j / beta, t - j
    if q.ndim == 0:
        return float(q), float(e)
    return q, e


def encode(s, params):
    n = params.n
    s = np.asarray(s, dtype=np.float64)
    idx, e_last = quantize_batch(s, params.beta, n - 1)
    q = idx / params.beta
    x = np.empty((n,) + s.shape)
    x[: n - 1] = params.gain_q * q
    x[n - 1] = params.gain_e * e_last
    return EncodedBlock(q=q, e_last=e_last, x=x)


def reconstruct(q, e_last, beta):
    """Invert the encoder: ``sum_i Q_i / beta^(i-1) + E_{n-1} / beta^(n-1)``.

    Evaluated in Horner form, peeling stages from the last one inwards.
    """
    acc = np.asarray(e_last, dtype=np.float64)
    for qi in reversed(list(q)):
        acc = qi + acc / beta
    return acc


def decode_q(y, params):
    """Minimum-distance estimate of one quantization symbol.

    The constellation is the full lattice ``grid_step * Z``, so the search
    over all integers reduces to rounding ``y / grid_step``; ties go to the
    larger index like everywhere else in the codec.
    """
    u = np.asarray(y, dtype=np.float64) / params.grid_step
    j = np.floor(u)
    j = j + (u - j >= 0.5)
    return j / params.beta


def decode_e(y_n, params):
    # E[E Y] / E[Y^2] = sqrt(P sigma_e2) / (P + sigma_z2)
    return params.lmmse_coef * np.asarray(y_n, dtype=np.float64)


def decode(y, params):
    if isinstance(y, ChannelBlock):
        y = y.y
    y = np.asarray(y, dtype=np.float64)
    n = params.n
    if y.shape[0] != n:
        raise ValueError(f"expected {n} channel outputs along axis 0, got {y.shape[0]}")
    q_hat = decode_q(y[: n - 1], params)
    e_hat = decode_e(y[n - 1], params)
    s_hat = reconstruct(q_hat, e_hat, params.beta)
    return DecodedBlock(q_hat=q_hat, e_hat=e_hat, s_hat=s_hat)
