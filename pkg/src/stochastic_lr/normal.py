"""Standard normal CDF and its inverse (probit)."""
import math

__all__ = ["norm_cdf", "probit"]

# Acklam's rational approximation, relative error ~1.15e-9 before polishing.
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)
_P_LOW = 0.02425
_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)


def norm_cdf(x: float) -> float:
    """Phi(x), using erfc so the lower tail keeps full relative precision."""
    return 0.5 * math.erfc(-x / _SQRT2)


def _lower_half(p: float) -> float:
    # p in (0, 0.5]; result <= 0
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        x = ((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5])
             / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))
    else:
        q = p - 0.5
        r = q * q
        x = ((((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
             / (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0))
    # one Halley step against the erfc-based CDF
    e = norm_cdf(x) - p
    u = e * _SQRT2PI * math.exp(0.5 * x * x)
    return x - u / (1.0 + 0.5 * x * u)


def probit(p) -> float:
    """Inverse standard normal CDF.

    The upper half is evaluated through the complement ``1 - p`` so that
    inputs carrying extra precision (``mpmath.mpf``, ``fractions.Fraction``)
    keep their tail information; for plain floats the subtraction is exact.

    Raises
    ------
    ValueError
        If ``p`` is not strictly inside (0, 1).
    """
    if not 0 < p < 1:
        raise ValueError(f"probit requires 0 < p < 1, got {p!r}")
    if p > 0.5:
        return -_lower_half(float(1 - p))
    return _lower_half(float(p))
