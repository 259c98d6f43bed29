"""Special functions used by the analytic fractional-moment formulas.

Only two families are needed: the modified Bessel function of the second
kind at real (fractional) order, and the standard normal PDF/CDF pair with
its inverse. Everything here is a thin, guarded layer over scipy.special
so that domain and overflow problems surface as exceptions instead of
silent infinities inside moment formulas.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special as _sc

__all__ = [
    "SpecFunAccuracy",
    "DEFAULT_ACCURACY",
    "bessel_k",
    "bessel_k_scaled",
    "std_normal_pdf",
    "std_normal_cdf",
    "std_normal_log_cdf",
    "std_normal_quantile",
]

_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class SpecFunAccuracy:
    """Tolerance bundle for special-function evaluation checks.

    rel_tol is the target relative accuracy, abs_tol the absolute floor
    below which values are treated as underflowed.
    """

    rel_tol: float = 1e-10
    abs_tol: float = 1e-300

    def __post_init__(self):
        if not (self.rel_tol > 0.0):
            raise ValueError("rel_tol must be positive")
        if not (self.abs_tol > 0.0):
            raise ValueError("abs_tol must be positive")


DEFAULT_ACCURACY = SpecFunAccuracy()


def bessel_k(nu, x) -> float | np.ndarray:
    """Modified Bessel function of the second kind K_nu(x), real order.

    Parameters
    ----------
    nu : float or array_like
        Order, any finite real (K is symmetric in the order sign).
    x : float or array_like
        Argument, strictly positive; broadcasts against the order.

    Raises
    ------
    ValueError
        If ``x <= 0`` or ``nu`` is not finite.
    OverflowError
        If the result is not finite (argument too small / order too
        large for double range).
    """
    nu = np.asarray(nu, dtype=float)
    if not np.all(np.isfinite(nu)):
        raise ValueError("Bessel order must be finite")
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0) or not np.all(np.isfinite(x)):
        raise ValueError("bessel_k requires x > 0")
    out = _sc.kv(nu, x)
    if not np.all(np.isfinite(out)):
        raise OverflowError(f"K_nu overflowed for order {nu!r}, argument {x!r}")
    return out if np.ndim(out) else float(out)


def bessel_k_scaled(nu, x) -> float | np.ndarray:
    """Exponentially scaled Bessel function: exp(x) * K_nu(x).

    Needed by the inverse-Gaussian moment formula, where a factor
    exp(b/a) would otherwise overflow long before the product does.
    """
    nu = np.asarray(nu, dtype=float)
    if not np.all(np.isfinite(nu)):
        raise ValueError("Bessel order must be finite")
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0) or not np.all(np.isfinite(x)):
        raise ValueError("bessel_k_scaled requires x > 0")
    out = _sc.kve(nu, x)
    if not np.all(np.isfinite(out)):
        raise OverflowError(f"scaled K_nu overflowed for order {nu!r}, argument {x!r}")
    return out if np.ndim(out) else float(out)


def std_normal_pdf(x):
    """phi(x) = exp(-x^2/2) / sqrt(2 pi)."""
    x = np.asarray(x, dtype=float)
    out = np.exp(-0.5 * x * x) / _SQRT_2PI
    return out if out.ndim else float(out)


def std_normal_cdf(x):
    """Phi(x), the standard normal CDF."""
    x = np.asarray(x, dtype=float)
    out = _sc.ndtr(x)
    return out if out.ndim else float(out)


def std_normal_log_cdf(x):
    """log Phi(x), accurate far into the lower tail."""
    x = np.asarray(x, dtype=float)
    out = _sc.log_ndtr(x)
    return out if out.ndim else float(out)


def std_normal_quantile(p):
    """Phi^{-1}(p) for 0 < p < 1."""
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0.0) or np.any(p >= 1.0):
        raise ValueError("quantile requires 0 < p < 1")
    out = _sc.ndtri(p)
    return out if out.ndim else float(out)
