"""Scheme parameters, quantizer-resolution schedules and residual calibration.

All logarithms are natural. Any fixed base cancels in the asymptotic
statements, but the numeric value of the adaptive epsilon depends on it.
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

from .kernels import quantize_batch
from .rng import RngStream

__all__ = [
    "ValidationError",
    "ScheduleDomainError",
    "DegenerateVarianceError",
    "BetaClampWarning",
    "SchemeParams",
    "BetaSchedule",
    "SweepGrid",
    "k_constant",
    "epsilon_schedule",
    "beta_from_schedule",
    "calibrate_sigma_e2",
    "calibrated",
    "implied_epsilon",
    "DEFAULT_DELTA_FRACTION",
]

DEFAULT_DELTA_FRACTION = 0.08
# Stream indices at and above this value are reserved for pilot runs so they
# never collide with the per-chunk streams of a simulation.
PILOT_STREAM_BASE = 1 << 40


class ValidationError(ValueError):
    """A parameter violates one of the scheme's standing assumptions."""


class ScheduleDomainError(ValueError):
    """The adaptive epsilon formula falls outside (0, 1) at this SNR."""


class DegenerateVarianceError(RuntimeError):
    pass


class BetaClampWarning(UserWarning):
    pass


def k_constant(sigma_s2, delta):
    """Decay constant of the symbol-error term, ``1 / (8 (sigma_s2 + delta))``."""
    if sigma_s2 <= 0 or delta <= 0:
        raise ValidationError("sigma_s2 and delta must be positive")
    return 1.0 / (8.0 * (sigma_s2 + delta))


@dataclass(frozen=True)
class SchemeParams:
    """Full configuration of the scheme for one operating point.

    ``sigma_e2`` is the second moment of the last residual ``E_{n-1}``; it is
    shared by the encoder (power scaling) and the decoder (LMMSE gain) and is
    normally filled in by :func:`calibrate_sigma_e2`. It stays ``None`` until
    calibrated. For ``n == 1`` it is unused.
    """

    n: int
    sigma_s2: float = 1.0
    sigma_z2: float = 1.0
    power: float = 1.0
    beta: float = 1.0
    delta: Optional[float] = None
    sigma_e2: Optional[float] = None
    k_const: Optional[float] = None

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 1:
            raise ValidationError(f"n must be ≥ 1, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        if self.delta is None:
            object.__setattr__(self, "delta", DEFAULT_DELTA_FRACTION * self.sigma_s2)
        if not self.sigma_s2 > 0.25:
            raise ValidationError(
                f"sigma_s2 must exceed 1/4 (standing assumption so that the source-variance "
                f"bound covers every quantization symbol), got {self.sigma_s2!r}"
            )
        for name in ("sigma_z2", "power", "delta"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValidationError(f"{name} must be a positive finite number, got {v!r}")
        if not (self.beta >= 1 and math.isfinite(self.beta)):
            raise ValidationError(f"beta must be ≥ 1, got {self.beta!r}")
        if self.sigma_e2 is not None:
            if not self.sigma_e2 > 0:
                raise ValidationError(f"sigma_e2 must be positive, got {self.sigma_e2!r}")
            if self.n >= 2 and self.sigma_e2 > 0.25:
                raise ValidationError(f"sigma_e2 must be ≤ 1/4 for n ≥ 2, got {self.sigma_e2!r}")
        if self.k_const is None:
            object.__setattr__(self, "k_const", k_constant(self.sigma_s2, self.delta))
        elif not self.k_const > 0:
            raise ValidationError(f"k_const must be positive, got {self.k_const!r}")

    @classmethod
    def from_snr(cls, n, snr, sigma_z2=1.0, **kwargs):
        return cls(n=n, sigma_z2=sigma_z2, power=snr * sigma_z2, **kwargs)

    def snr(self):
        return self.power / self.sigma_z2

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    @property
    def residual_var(self):
        """Variance assumed for the uncoded (last) channel input."""
        if self.n == 1:
            return self.sigma_s2
        if self.sigma_e2 is None:
            raise ValidationError("sigma_e2 has not been calibrated for n ≥ 2")
        return self.sigma_e2

    @property
    def gain_q(self):
        return math.sqrt(self.power / (self.sigma_s2 + self.delta))

    @property
    def grid_step(self):
        """Distance between adjacent points of the transmitted symbol lattice."""
        return self.gain_q / self.beta

    @property
    def gain_e(self):
        return math.sqrt(self.power / self.residual_var)

    @property
    def lmmse_coef(self):
        return math.sqrt(self.power * self.residual_var) / (self.power + self.sigma_z2)


@dataclass(frozen=True)
class BetaSchedule:
    """Rule mapping an SNR to the quantizer scale.

    ``kind`` is ``"fixed"`` (use ``beta``), ``"fixed_epsilon"`` (beta^2 = snr^(1-eps))
    or ``"adaptive"`` (eps chosen from the SNR, then the same power law).
    """

    kind: str
    beta: Optional[float] = None
    epsilon: Optional[float] = None

    def __post_init__(self):
        if self.kind == "fixed":
            if self.beta is None or not self.beta >= 1:
                raise ValidationError(f"fixed schedule needs beta ≥ 1, got {self.beta!r}")
        elif self.kind == "fixed_epsilon":
            if self.epsilon is None or not 0 < self.epsilon < 1:
                raise ValidationError(f"fixed_epsilon schedule needs 0 < epsilon < 1, got {self.epsilon!r}")
        elif self.kind != "adaptive":
            raise ValidationError(f"unknown schedule kind {self.kind!r}")

    @classmethod
    def fixed(cls, beta):
        return cls("fixed", beta=float(beta))

    @classmethod
    def fixed_epsilon(cls, epsilon):
        return cls("fixed_epsilon", epsilon=float(epsilon))

    @classmethod
    def adaptive(cls):
        return cls("adaptive")

    @classmethod
    def parse(cls, text):
        """Parse ``adaptive``, ``fixed:<beta>`` or ``fixed-eps:<eps>``."""
        text = text.strip()
        if text == "adaptive":
            return cls.adaptive()
        head, sep, value = text.partition(":")
        if sep:
            try:
                v = float(value)
            except ValueError:
                raise ValidationError(f"bad schedule value in {text!r}") from None
            if head == "fixed":
                return cls.fixed(v)
            if head in ("fixed-eps", "fixed_eps", "fixed_epsilon"):
                return cls.fixed_epsilon(v)
        raise ValidationError(f"schedule must be adaptive, fixed:<beta> or fixed-eps:<eps>, got {text!r}")

    def __str__(self):
        if self.kind == "fixed":
            return f"fixed:{self.beta!r}"
        if self.kind == "fixed_epsilon":
            return f"fixed-eps:{self.epsilon!r}"
        return "adaptive"


@dataclass(frozen=True)
class SweepGrid:
    snr_db_points: Sequence[float]
    samples_per_point: int = 1_000_000
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        pts = tuple(float(v) for v in self.snr_db_points)
        object.__setattr__(self, "snr_db_points", pts)
        if not pts:
            raise ValidationError("snr_db_points must not be empty")
        if any(b <= a for a, b in zip(pts, pts[1:])):
            raise ValidationError("snr_db_points must be strictly increasing")
        if int(self.samples_per_point) < 1:
            raise ValidationError("samples_per_point must be ≥ 1")
        if not 0 <= int(self.seed) < 2**64:
            raise ValidationError("seed must be a 64-bit unsigned integer")
        if int(self.workers) < 1:
            raise ValidationError("workers must be ≥ 1")


def epsilon_schedule(snr, n, k):
    """Adaptive exponent ``log(n log snr / k) / log snr``.

    Raises :class:`ScheduleDomainError` when the value is not in the open
    interval (0, 1), where the power-law schedule stops making sense.
    """
    if n < 2:
        raise ValidationError("the adaptive schedule needs n ≥ 2")
    if not snr > 1:
        raise ScheduleDomainError(f"adaptive schedule needs snr > 1, got {snr!r}")
    ln_snr = math.log(snr)
    arg = n * ln_snr / k
    if arg <= 1:
        raise ScheduleDomainError(f"n*log(snr)/k = {arg!r} ≤ 1 gives a nonpositive epsilon")
    eps = math.log(arg) / ln_snr
    if not 0 < eps < 1:
        raise ScheduleDomainError(f"epsilon({snr!r}) = {eps!r} is outside (0, 1)")
    return eps


def beta_from_schedule(snr, schedule, n=None, k=None, *, return_clamped=False):
    """Quantizer scale at ``snr``; values below 1 are clamped to 1 with a warning.

    With ``return_clamped=True`` the result is a ``(beta, clamped)`` pair.
    """
    clamped = False
    if schedule.kind == "fixed":
        beta = schedule.beta
    else:
        if not snr > 1:
            raise ScheduleDomainError(f"power-law schedules need snr > 1, got {snr!r}")
        eps = schedule.epsilon if schedule.kind == "fixed_epsilon" else epsilon_schedule(snr, n, k)
        beta = snr ** ((1.0 - eps) / 2.0)
        if beta < 1.0:
            warnings.warn(f"schedule gives beta = {beta!r} < 1 at snr {snr!r}; clamped to 1", BetaClampWarning)
            beta, clamped = 1.0, True
    return (beta, clamped) if return_clamped else beta


def implied_epsilon(snr, beta):
    """Exponent ``eps`` for which ``beta**2 == snr**(1 - eps)``."""
    return 1.0 - 2.0 * math.log(beta) / math.log(snr)


def pilot_generator(seed, stream=0):
    return RngStream(seed, PILOT_STREAM_BASE + stream).generator()


def calibrate_sigma_e2(params, pilot_samples=1_000_000, seed=0):
    """Estimate the second moment of ``E_{n-1}`` from a noiseless pilot run.

    The residual has zero mean by symmetry, so the raw second moment is used;
    it is the quantity both the power normalization and the LMMSE gain need.
    """
    if params.n < 2:
        raise ValidationError("calibration only applies to n ≥ 2")
    if pilot_samples < 10_000:
        raise ValidationError("pilot_samples must be ≥ 10^4")
    rng = pilot_generator(seed)
    s = math.sqrt(params.sigma_s2) * rng.standard_normal(int(pilot_samples))
    _, e_last = quantize_batch(s, params.beta, params.n - 1)
    var = math.fsum(e_last * e_last) / e_last.size
    if var < 1e-12:
        raise DegenerateVarianceError(f"residual variance {var!r} is degenerate; check beta")
    return var


def calibrated(params, pilot_samples=1_000_000, seed=0):
    """``params`` with ``sigma_e2`` filled in (unchanged for ``n == 1``)."""
    if params.n == 1:
        return params
    return params.replace(sigma_e2=calibrate_sigma_e2(params, pilot_samples, seed))
