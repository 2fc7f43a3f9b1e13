"""One-dimensional Gaussians under a leakage constraint.

A 1-D density ``N(m, s)`` satisfies the leakage constraint at level
``alpha`` with respect to the boundary ``{0}`` iff ``|m| >= p * s`` where
``p`` is the upper ``alpha`` quantile of the standard normal.  The
cross-entropy minimiser under that constraint has a closed form, computed
by :func:`constrained_mle`.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._validation import check_alpha
from .exceptions import DegenerateClusterError, InputError

LN_2PI = math.log(2.0 * math.pi)

# Acklam's rational approximation to the standard normal quantile.
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)
_P_LOW = 0.02425


@dataclass(frozen=True)
class Moments1D:
    """Sample mean, biased (1/n) standard deviation and size of a 1-D sample."""

    mean: float
    std: float
    count: int = 1

    def __post_init__(self):
        if not self.std >= 0.0:
            raise InputError(f"std must be non-negative, got {self.std!r}")
        if self.count < 0:
            raise InputError("count must be non-negative")

    @classmethod
    def from_sample(cls, x):
        x = np.asarray(x, dtype=np.float64).ravel()
        if x.size == 0:
            raise InputError("empty sample")
        return cls(float(x.mean()), float(x.std()), int(x.size))


@dataclass(frozen=True)
class ConstrainedGaussian1D:
    """Fitted 1-D density; ``constrained`` tells whether the constraint was active."""

    mean: float
    std: float
    p_alpha: float
    constrained: bool

    def to_dict(self):
        return {"mean": self.mean, "std": self.std,
                "p_alpha": self.p_alpha, "constrained": self.constrained}


def _lower_quantile_guess(p):
    """Acklam's approximation of the standard normal quantile at ``p`` (rel. err ~1e-9)."""
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        num = ((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]
        den = (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
        return num / den
    if p <= 1.0 - _P_LOW:
        q = p - 0.5
        r = q * q
        num = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
        den = ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
        return num / den
    return -_lower_quantile_guess(1.0 - p)


def _std_cdf(z):
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def quantile_upper(alpha):
    """Return ``p`` with ``P(Z > p) = alpha`` for a standard normal ``Z``.

    Evaluated as ``-Phi^-1(alpha)`` so that tiny ``alpha`` keeps full
    relative precision; the rational guess is polished by one Newton step.
    """
    alpha = check_alpha(alpha)
    z = _lower_quantile_guess(alpha)
    density = math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
    z -= (_std_cdf(z) - alpha) / density
    return -z


def normal_cdf(x, mean=0.0, std=1.0):
    """``P(N(mean, std) <= x)``."""
    if not std > 0.0:
        raise InputError(f"std must be positive, got {std!r}")
    return _std_cdf((x - mean) / std)


def cross_entropy_1d(mom, mean, std):
    """Cross-entropy (nats) of a sample with moments ``mom`` against ``N(mean, std)``."""
    if not std > 0.0:
        raise InputError(f"std must be positive, got {std!r}")
    var = std * std
    return 0.5 * ((mom.std ** 2 + (mean - mom.mean) ** 2) / var + math.log(var) + LN_2PI)


def constrained_params(mean, std, p_alpha):
    """Vectorised core of :func:`constrained_mle`.

    Parameters
    ----------
    mean, std : array_like
        Sample moments; ``std`` must be positive.
    p_alpha : float or None
        Upper quantile; ``None`` (or a non-positive value) disables the constraint.

    Returns
    -------
    m, s, active : ndarray
    """
    mean = np.asarray(mean, dtype=np.float64)
    std = np.asarray(std, dtype=np.float64)
    if p_alpha is None or p_alpha <= 0.0:
        return mean.copy(), std.copy(), np.zeros(mean.shape, dtype=bool)
    p = float(p_alpha)
    active = np.abs(mean) < p * std
    sign = np.where(mean >= 0.0, 1.0, -1.0)
    # Root of m^2 + p^2 mX m - p^2 (sX^2 + mX^2) = 0 lying on the side of mX,
    # written as (product of roots) / (other root) to avoid cancellation.
    second = mean * mean + std * std
    disc = np.sqrt((p * p + 4.0) * mean * mean + 4.0 * std * std)
    m = 2.0 * p * p * second * sign / (p * p * np.abs(mean) + p * disc)
    m = np.where(active, m, mean)
    s = np.where(active, np.abs(m) / p, std)
    return m, s, active


def constrained_mle(mom, alpha):
    """Cross-entropy minimiser over ``N(m, s)`` subject to ``|m| >= p_alpha * s``.

    The sample MLE is returned untouched when it already satisfies the
    constraint (and always for ``alpha >= 0.5``).  Otherwise the optimum
    sits on the constraint boundary on the same side as the sample mean;
    a zero sample mean is pushed to the positive side.
    """
    alpha = check_alpha(alpha)
    if not mom.std > 0.0:
        raise DegenerateClusterError("cannot fit a 1-D Gaussian to a zero-variance sample")
    if alpha >= 0.5:
        return ConstrainedGaussian1D(float(mom.mean), float(mom.std), 0.0, False)
    p = quantile_upper(alpha)
    m, s, active = constrained_params(mom.mean, mom.std, p)
    return ConstrainedGaussian1D(float(m), float(s), p, bool(active))


def leakage_of(g):
    """Mass a 1-D Gaussian ``g`` (anything with ``mean``/``std``) puts across zero."""
    # min(Phi(-m/s), 1 - Phi(-m/s)) evaluated on the tail side only
    return normal_cdf(-abs(g.mean), 0.0, g.std)
