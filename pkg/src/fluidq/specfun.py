"""Special functions: log-Gamma, Bessel J of integer order, erf."""

import math

from ._backend import kernels
from .errors import DomainError


def ln_gamma(a: float) -> float:
    """log Gamma(a) for a > 0 (Lanczos, g = 7, nine terms)."""
    if not a > 0.0:
        raise DomainError(f"ln_gamma needs a > 0, got {a}")
    return kernels.ln_gamma(float(a))


def gamma(a: float) -> float:
    return math.exp(ln_gamma(a))


def bessel_log(n: int, x: float) -> tuple[float, float]:
    """Return (log|J_n(x)|, sign of J_n(x)) for any integer n and real x.

    Negative order and argument are reduced with J_{-n}(x) = (-1)^n J_n(x)
    and J_n(-x) = (-1)^n J_n(x).
    """
    n = int(n)
    sign = 1.0
    if n < 0:
        n = -n
        if n % 2:
            sign = -sign
    if x < 0.0:
        x = -x
        if n % 2:
            sign = -sign
    if x == 0.0:
        return (0.0, sign) if n == 0 else (-math.inf, 0.0)
    lv, s = kernels.bessel_log(n, float(x))
    return lv, sign * s


def bessel_j_int(n: int, x: float) -> float:
    lv, s = bessel_log(n, x)
    if s == 0.0:
        return 0.0
    return s * math.exp(lv)


def erf(x: float) -> float:
    return math.erf(x)
