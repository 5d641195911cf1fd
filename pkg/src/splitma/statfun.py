"""Scalar special functions: standard normal CDF and the chi-square(1) CDF/quantile."""

import math

from scipy.special import erfinv

_SQRT2 = math.sqrt(2.0)


def std_normal_cdf(x):
    """Standard normal CDF, saturating at 0 and 1 for extreme arguments."""
    return 0.5 * math.erfc(-x / _SQRT2)


def chi2_1_cdf(x):
    """CDF of a chi-square variable with one degree of freedom.

    Uses ``F(x) = 2*Phi(sqrt(x)) - 1 = erf(sqrt(x/2))``.
    """
    if x < 0:
        raise ValueError(f"chi2_1_cdf requires x >= 0, got {x!r}")
    if math.isinf(x):
        return 1.0
    return math.erf(math.sqrt(0.5 * x))


def chi2_1_quantile(p):
    """Inverse of :func:`chi2_1_cdf` on the open interval (0, 1).

    The chi-square(1) quantile is ``2 * erfinv(p)**2``, which keeps full
    relative precision as ``p -> 0`` and is accurate up to ``p = 1 - 1e-16``.
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"chi2_1_quantile requires 0 < p < 1, got {p!r}")
    z = float(erfinv(p))
    return 2.0 * z * z
