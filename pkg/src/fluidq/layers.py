"""Layers where the ray expansion breaks down: across Y0(z), at z = 0, at x = 0."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import log_ndtr

from .errors import NoRoot, WrongRegion
from .model import (
    X0_LAYER_UMAX, EvalResult, ModelParams, classify_region, log_from_tail,
    log_stationary_pk, make_result, scaled_point, similarity_width, y0_curve,
)
from .specfun import erf, ln_gamma


@dataclass(frozen=True)
class TransitionVars:
    rho_stretch: float
    r_of_z: float
    V: float


def transition_vars(m: ModelParams, y: float, z: float, published: bool = False) -> TransitionVars:
    if z <= 1.0:
        raise WrongRegion(f"transition layer needs z > 1, got z={z}")
    stretch = (y - y0_curve(m, z)) / math.sqrt(m.eps)
    r = similarity_width(m, z, published=published)
    return TransitionVars(rho_stretch=stretch, r_of_z=r, V=stretch / r)


def transition_F_raw(m: ModelParams, x: float, k: int, published: bool = False) -> float:
    tv = transition_vars(m, x * m.eps ** 2, k * m.eps, published)
    return (1.0 - m.rho) * m.rho ** k * 0.5 * (1.0 + erf(tv.V / math.sqrt(2.0)))


def transition_F(m: ModelParams, x: float, k: int, published: bool = False) -> EvalResult:
    """F_k(inf) times the normal CDF of the similarity variable V."""
    pt = scaled_point(m, x, k)
    tv = transition_vars(m, pt.y, pt.z, published)
    lp = log_stationary_pk(m, k)
    return make_result(m, x, k, "transition", lp + float(log_ndtr(tv.V)),
                       log_tail=lp + float(log_ndtr(-tv.V)), log_p=lp,
                       region=classify_region(m, pt), V=tv.V, r_of_z=tv.r_of_z)


@dataclass(frozen=True)
class XiState:
    y: float
    xi: float
    S0: float
    T0v: float
    J0: float
    Psi0: float
    residual: float
    sign_changes: int


def xi_equation(m: ModelParams, xi: float, y: float) -> float:
    """Left minus right side of the implicit equation fixing xi(y)."""
    rho = m.rho
    a = (1.0 - 1.0 / xi) * rho
    return a - (1.0 - xi) - (rho + 1.0) * math.log(xi) - m.mu * (a + 1.0 - xi) ** 2 * y


def solve_xi(m: ModelParams, y: float) -> XiState:
    """Root xi of the z = 0 equation with e^{S T} = xi on the ray through (y, 0).

    The equation also has a root in (rho, 1) that corresponds to no ray; the
    physical one lies in (0, rho), where the left side is bracketed by
    zeta^2 / mu > 0 at xi = rho and -inf as xi -> 0.
    """
    if not y > 0.0:
        raise WrongRegion(f"z = 0 layer needs y > 0, got {y}")
    f = lambda xi: xi_equation(m, xi, y)
    top = m.rho * (1.0 - 1e-12)
    lo = 0.5 * m.rho
    while f(lo) > 0.0:
        lo *= 0.5
        if lo < 1e-300:
            raise NoRoot(f"solve_xi: no sign change below rho for y={y}")
    try:
        xi = brentq(f, lo, top, xtol=1e-300, rtol=1e-15, maxiter=400)
    except ValueError as exc:
        raise NoRoot(f"solve_xi: {exc}") from exc
    # count sign changes on a grid to flag any extra root in (0, rho)
    grid = np.geomspace(max(lo * 1e-3, 1e-300), top, 400)
    vals = np.array([f(g) for g in grid])
    changes = int(np.count_nonzero(np.signbit(vals[1:]) != np.signbit(vals[:-1])))
    S0 = m.total_rate - m.mu * xi - m.lam / xi
    J0 = 2.0 * (m.mu * xi - m.lam / xi) * y - 1.0
    return XiState(y=y, xi=xi, S0=S0, T0v=math.log(xi) / S0, J0=J0,
                   Psi0=2.0 * y * S0 + math.log(xi), residual=abs(f(xi)),
                   sign_changes=changes)


def z0_amplitude_log(m: ModelParams, xs: XiState, k: int) -> float:
    """log of xi^{k+1}(1-xi)/(rho-xi) + (rho/xi)^k."""
    a = (k + 1) * math.log(xs.xi) + math.log1p(-xs.xi) - math.log(m.rho - xs.xi)
    b = k * (m.log_rho - math.log(xs.xi))
    hi = max(a, b)
    return hi + math.log(math.exp(a - hi) + math.exp(b - hi))


def boundary_z0_F(m: ModelParams, x: float, k: int) -> EvalResult:
    """Few-active-sources layer: F_k = F_k(inf) minus an exponentially small deficit.

    The deficit is positive; the probability therefore stays below F_k(inf).
    """
    pt = scaled_point(m, x, k)
    if not pt.y > 0.0:
        raise WrongRegion("z = 0 layer needs x > 0")
    xs = solve_xi(m, pt.y)
    log_tail = (0.5 * math.log(m.eps) + xs.Psi0 / m.eps + math.log1p(-m.rho)
                + z0_amplitude_log(m, xs, k)
                + 0.5 * math.log(m.drift_gap / (2.0 * math.pi * xs.J0 * xs.S0)))
    lp = log_stationary_pk(m, k)
    return make_result(m, x, k, "boundary-z0", log_from_tail(lp, log_tail), log_tail=log_tail,
                       log_p=lp, region=classify_region(m, pt), xi=xs.xi, S0=xs.S0,
                       J0=xs.J0, xi_residual=xs.residual)


def boundary_x0_log(m: ModelParams, u: float, z: float) -> float:
    """log F near an empty buffer for z > 1, in the layer variable u = x / c."""
    zm1 = z - 1.0
    w = m.total_rate * u / zm1
    eps = m.eps
    return (math.log(eps * (1.0 - m.rho) * math.sqrt((1.0 - m.rho) / (1.0 + m.rho)) / (2.0 * math.pi * zm1))
            + ln_gamma(w + 1.0 - m.alpha)
            + m.log_rho / eps
            + (zm1 / eps) * math.log(m.lam * math.e ** 2 * eps * u / zm1 ** 2)
            + m.alpha * math.log(w)
            + w * math.log(eps / ((m.rho + 1.0) * zm1))
            + 2.0 * m.lam * u / zm1)


def boundary_x0_F(m: ModelParams, x: float, k: int, u_max: float = X0_LAYER_UMAX) -> EvalResult:
    pt = scaled_point(m, x, k)
    if pt.z <= 1.0:
        raise WrongRegion(f"x = 0 layer needs k > c, got k={k}")
    if pt.u > u_max:
        raise WrongRegion(f"x = 0 layer needs u = x/c <= {u_max}, got {pt.u:.4g}")
    lp = log_stationary_pk(m, k)
    if pt.u == 0.0:
        return make_result(m, x, k, "boundary-x0", -math.inf, log_tail=lp, log_p=lp,
                           region=classify_region(m, pt), exact_zero=True)
    return make_result(m, x, k, "boundary-x0", boundary_x0_log(m, pt.u, pt.z), log_p=lp,
                       region=classify_region(m, pt))
