"""Standard normal CDF, density and quantile function.

The quantile uses Acklam's rational approximation as a starting point and one
Halley step against an erfc-based CDF. Upper-tail probabilities are mapped to
the lower tail through ``1 - p`` (exact for p >= 0.5), so the result is oddly
symmetric and keeps full relative accuracy in both tails.
"""

import math

import numpy as np
from numba import vectorize
from scipy.special import erfc

from .errors import DomainError

__all__ = ["norm_cdf", "norm_pdf", "inv_norm_cdf"]

_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)

# Acklam (2003) coefficients
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def norm_cdf(x):
    """Standard normal CDF, ``0.5 * erfc(-x / sqrt(2))``."""
    return 0.5 * erfc(-np.asarray(x, dtype=float) / _SQRT2)


def norm_pdf(x):
    """Standard normal density."""
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * x * x) / _SQRT2PI


@vectorize(["float64(float64)"], cache=True)
def _quantile_kernel(p):
    # work in the lower tail; 1 - p is exact for p >= 0.5
    q = 1.0 - p if p > 0.5 else p
    if q < _P_LOW:
        t = math.sqrt(-2.0 * math.log(q))
        z = (((((_C[0] * t + _C[1]) * t + _C[2]) * t + _C[3]) * t + _C[4]) * t + _C[5]) / (
            (((_D[0] * t + _D[1]) * t + _D[2]) * t + _D[3]) * t + 1.0)
    else:
        t = q - 0.5
        r = t * t
        z = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * t / (
            ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0)
    # one Halley step; skipped only for subnormal q, where exp(z^2 / 2) overflows
    if 0.5 * z * z < 700.0:
        e = 0.5 * math.erfc(-z / _SQRT2) - q
        u = e * _SQRT2PI * math.exp(0.5 * z * z)
        z = z - u / (1.0 + 0.5 * z * u)
    if q == 0.5:
        z = 0.0
    return -z if p > 0.5 else z


def inv_norm_cdf(p):
    """Quantile of the standard normal distribution.

    Parameters
    ----------
    p : float or array_like
        Probabilities strictly inside (0, 1).

    Returns
    -------
    float or ndarray
        ``z`` with ``Phi(z) = p``; a Python float for scalar input.

    Raises
    ------
    DomainError
        If any ``p`` is outside the open interval (0, 1) or is NaN.
    """
    arr = np.asarray(p, dtype=float)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    if not np.all((arr > 0.0) & (arr < 1.0)):
        bad = arr[~((arr > 0.0) & (arr < 1.0))][0]
        raise DomainError(f"inv_norm_cdf requires 0 < p < 1, got {bad!r}")
    out = _quantile_kernel(arr)
    if scalar:
        return float(out[0])
    return out.reshape(np.shape(p))
