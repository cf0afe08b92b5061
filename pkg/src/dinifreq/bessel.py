"""Integer-order Bessel functions of the first kind by power series, and their zeros."""

from __future__ import annotations

from decimal import Decimal, localcontext
from functools import lru_cache
from math import factorial

import numpy as np

from .errors import DomainError

N_TERMS = 40
MAX_ORDER = 12
MAX_ZERO_INDEX = 3


def series_coefficients(kappa: int, scale: float = 1.0, terms: int = N_TERMS) -> np.ndarray:
    """c_m with J_kappa(scale*s) = sum_m c_m s^(2m+kappa)."""
    m = np.arange(terms)
    half = 0.5 * scale
    return np.array([(-1.0) ** k * half ** (2 * k + kappa) / (factorial(k) * factorial(k + kappa))
                     for k in m])


def besselj(kappa: int, x):
    if kappa < 0:
        return (-1) ** kappa * besselj(-kappa, x)
    x = np.asarray(x, dtype=float)
    c = series_coefficients(kappa)
    x2 = x * x
    total = np.zeros_like(x)
    for ck in c[::-1]:
        total = total * x2 + ck
    return total * x**kappa


def besselj_prime(kappa: int, x):
    return 0.5 * (besselj(kappa - 1, x) - besselj(kappa + 1, x))


def besselj_exact(kappa: int, x: float, terms: int = 60) -> float:
    """Scalar series summed with 50 significant digits, so cancellation costs nothing up to x ~ 25."""
    with localcontext() as ctx:
        ctx.prec = 50
        half = Decimal(x) / 2
        h2 = half * half
        term = half**kappa / factorial(kappa)
        total = term
        for k in range(1, terms):
            term = -term * h2 / (k * (k + kappa))
            total += term
        return float(total)


@lru_cache(maxsize=None)
def bessel_zero(kappa: int, m: int, step: float = 0.05) -> float:
    """m-th positive zero of J_kappa by a sign scan followed by bisection."""
    if not (0 <= kappa <= MAX_ORDER and 1 <= m <= MAX_ZERO_INDEX):
        raise DomainError(f"(kappa, m) = ({kappa}, {m}) outside the series envelope")
    x = step
    f_prev = float(besselj(kappa, x))
    found = 0
    while x < 40.0:
        x_next = x + step
        f_next = float(besselj(kappa, x_next))
        if f_prev == 0.0 or f_prev * f_next < 0:
            found += 1
            if found == m:
                lo, hi = x, x_next
                f_lo = besselj_exact(kappa, lo)
                for _ in range(200):
                    mid = 0.5 * (lo + hi)
                    if mid in (lo, hi):
                        break
                    f_mid = besselj_exact(kappa, mid)
                    if f_lo * f_mid <= 0:
                        hi = mid
                    else:
                        lo, f_lo = mid, f_mid
                return 0.5 * (lo + hi)
        x, f_prev = x_next, f_next
    raise DomainError("zero not found in the scan range")
