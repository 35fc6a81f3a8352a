"""Rays from the corner (y, z) = (0, 1) and the ray expansion built on them.

Along the ray with index s the scaled state moves as

    y(s, t) = [mu (e^{st} - st - 1) + lam (1 - st - e^{-st})] / s^2
    z(s, t) = [mu (e^{st} - 1) + lam (e^{-st} - 1)] / s + 1

and the exponent, Jacobian and amplitude follow in closed form. Every formula
is written in terms of u = s t with power series near u = 0, so the s = 0 ray
(the separating curve y = Y0(z)) is evaluated without special cases.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, ExpansionBreakdown, NegativeTime, NoConvergence, OnCaustic, WrongRegion
from .model import (
    EvalResult, ModelParams, RegionLabel, classify_region, log_from_tail,
    log_stationary_pk, make_result, scaled_point, y0_curve,
)

_SERIES_TERMS = 26
_SERIES_CUT = 0.5


def _exp_series(sign: float) -> np.ndarray:
    n = np.arange(_SERIES_TERMS + 3)
    fact = np.array([math.factorial(int(i)) for i in n], dtype=float)
    return sign ** n / fact


@functools.lru_cache(maxsize=64)
def _jac_series(lam: float, mu: float) -> np.ndarray:
    """Taylor coefficients of J(s, t) / t^3 as a function of u = s t."""
    ep, em = _exp_series(1.0), _exp_series(-1.0)
    N = _SERIES_TERMS + 1
    phi1 = lambda e: e[1:N + 1]          # (e^u - 1)/u
    phi2 = lambda e: e[2:N + 2]          # (e^u - 1 - u)/u^2
    Y = mu * phi2(ep) - lam * phi2(em)
    # em[n+1] = -(coefficient of (e^{-u} - 1)/(-u)), so the lam term flips sign
    Z = mu * phi1(ep) + lam * phi1(em)
    zt = mu * ep[:N] - lam * em[:N]
    bracket = 2.0 * np.convolve(zt, Y)[:N] - np.convolve(Z, Z)[:N]
    return bracket[1:]


def _horner(coef: np.ndarray, u: float) -> float:
    acc = 0.0
    for a in coef[::-1]:
        acc = acc * u + a
    return acc


def _phi1(u: float) -> float:
    return math.expm1(u) / u if u != 0.0 else 1.0


def _phi2(u: float) -> float:
    if abs(u) < _SERIES_CUT:
        acc, term = 0.0, 0.5
        for n in range(_SERIES_TERMS):
            acc += term
            term *= u / (n + 3)
        return acc
    return (math.expm1(u) - u) / (u * u)


@dataclass(frozen=True)
class RayState:
    s: float
    t: float
    y: float
    z: float
    p: float
    q: float
    psi: float
    jac: float
    amp: float
    s_amp: float

    def eikonal_residual(self, m: ModelParams) -> float:
        return (m.mu * (1.0 - math.exp(self.q)) + m.lam * (1.0 - math.exp(-self.q))
                + (self.z - 1.0) * self.p)


def _yz(m: ModelParams, s: float, t: float) -> tuple[float, float]:
    u = s * t
    y = t * t * (m.mu * _phi2(u) - m.lam * _phi2(-u))
    z = 1.0 + t * (m.mu * _phi1(u) - m.lam * _phi1(-u))
    return y, z


def _jacobian(m: ModelParams, s: float, t: float, y: float, z: float) -> float:
    u = s * t
    if abs(u) < _SERIES_CUT:
        return t ** 3 * _horner(_jac_series(m.lam, m.mu), u)
    zt = m.mu * math.exp(u) - m.lam * math.exp(-u)
    return (2.0 * zt * y - (z - 1.0) ** 2) / s


def _s_amp(m: ModelParams, jac: float) -> float:
    """The product s K, finite across s = 0."""
    if jac <= 0.0:
        return math.nan if jac < 0.0 else math.inf
    return math.sqrt(m.drift_gap / (2.0 * math.pi * jac)) * (1.0 - m.rho)


def forward_ray(m: ModelParams, s: float, t: float) -> RayState:
    if t < 0.0:
        raise NegativeTime(f"ray parameter must be >= 0, got t={t}")
    y, z = _yz(m, s, t)
    q = m.log_rho - s * t
    psi = 2.0 * y * s + q * (z - 1.0) + m.log_rho
    jac = _jacobian(m, s, t, y, z)
    sk = _s_amp(m, jac)
    amp = sk / s if s != 0.0 else math.inf
    return RayState(s=s, t=t, y=y, z=z, p=s, q=q, psi=psi, jac=jac, amp=amp, s_amp=sk)


class RayExtremes(NamedTuple):
    T1: float
    z_max: float
    T2: float
    y_max: float


def ray_extremes(m: ModelParams, s: float) -> RayExtremes:
    """Where a ray with s < 0 turns around in z (T1) and peaks in y (T2)."""
    if s >= 0.0:
        raise DomainError(f"rays turn only for s < 0, got s={s}")
    T1 = m.log_rho / (2.0 * s)
    T2 = m.log_rho / s
    z_max = 1.0 + (2.0 * math.sqrt(m.lam * m.mu) - m.total_rate) / s
    return RayExtremes(T1=T1, z_max=z_max, T2=T2, y_max=m.zeta ** 2 / (s * s))


# Inversion. For fixed z the relation z(s, t) = z is a quadratic in w = e^{st}:
#   mu w^2 - (mu + lam + s (z - 1)) w + lam = 0,
# so t is explicit in s on each root and only y(s, t(s)) = y needs a 1-D solve.
# The larger root (w > 1 for s > 0) is the part of a ray before it turns in z,
# the smaller root (w_+ w_- = rho) the part after.

def _t_on_branch(m: ModelParams, s: float, z: float, branch: int) -> float:
    a = (z - 1.0) * s
    disc = (a + m.total_rate) ** 2 - 4.0 * m.lam * m.mu
    if disc < 0.0:
        disc = 0.0
    denom = math.sqrt(disc) + m.drift_gap - a
    log_wplus = math.log1p(2.0 * a / denom)
    if s == 0.0:
        base = (z - 1.0) / m.drift_gap
        return base if branch > 0 else math.inf
    if branch > 0:
        return log_wplus / s
    return (m.log_rho - log_wplus) / s


def _y_on_branch(m: ModelParams, s: float, z: float, branch: int) -> float:
    t = _t_on_branch(m, s, z, branch)
    return _yz(m, s, t)[0]


def _solve(f: Callable[[float], float], a: float, b: float) -> float:
    try:
        return brentq(f, a, b, xtol=1e-300, rtol=1e-15, maxiter=400)
    except (ValueError, RuntimeError) as exc:
        raise NoConvergence(f"ray inversion failed on [{a}, {b}]: {exc}") from exc


def turning_point(m: ModelParams, z: float) -> tuple[float, float]:
    """For z > 1: the ray index whose z-maximum is z, and the y it has there."""
    gap = (math.sqrt(m.mu) - math.sqrt(m.lam)) ** 2
    s_turn = -gap / (z - 1.0)
    y_turn = _yz(m, s_turn, m.log_rho / (2.0 * s_turn))[0]
    return s_turn, y_turn


def invert_ray(m: ModelParams, y: float, z: float) -> tuple[float, float]:
    """Find (s, t) with forward_ray(s, t) = (y, z).

    Points below Y0(z) lie on rays with s > 0; points above it (or at z <= 1)
    on rays with s < 0, reached either before or after the ray turns in z.
    """
    if y < 0.0 or z < 0.0:
        raise DomainError(f"need y >= 0 and z >= 0, got ({y}, {z})")
    if z == 1.0:
        if y == 0.0:
            raise DomainError("(0, 1) is the ray source; no unique ray")
        s = -m.zeta / math.sqrt(y)
        return s, m.log_rho / s
    if z > 1.0:
        if y == 0.0:
            raise DomainError("y = 0 with z > 1 is reached only as s -> +inf")
        Y0 = y0_curve(m, z)
        if abs(y - Y0) < 1e-12 * max(1.0, Y0):
            return 0.0, (z - 1.0) / m.drift_gap
        if y < Y0:
            h = lambda s: _y_on_branch(m, s, z, 1) - y
            hi = 1.5 * m.drift_gap ** 2 / m.total_rate * (Y0 - y) / Y0 / (z - 1.0)
            hi = max(hi, 1e-6)
            while h(hi) > 0.0:
                hi *= 2.0
                if hi > 1e12:
                    raise NoConvergence(f"no s > 0 bracket for ({y}, {z})")
            s = _solve(h, 0.0, hi)
            return s, _t_on_branch(m, s, z, 1)
        s_turn, y_turn = turning_point(m, z)
        if y <= y_turn:
            h = lambda s: _y_on_branch(m, s, z, 1) - y
            s = _solve(h, s_turn, 0.0)
            return s, _t_on_branch(m, s, z, 1)
        h = lambda s: _y_on_branch(m, s, z, -1) - y
        hi = 0.5 * s_turn
        while h(hi) < 0.0:
            hi *= 0.5
            if hi > -1e-300:
                raise NoConvergence(f"no post-turn bracket for ({y}, {z})")
        s = _solve(h, s_turn, hi)
        return s, _t_on_branch(m, s, z, -1)
    # z < 1: after the turn; y(s) falls from +inf at s -> 0- towards 0
    h = lambda s: _y_on_branch(m, s, z, -1) - y
    guess = -m.zeta / math.sqrt(max(y, 1e-8))
    lo = hi = guess
    if h(guess) > 0.0:
        while h(lo) > 0.0:
            lo *= 2.0
            if lo < -1e12:
                raise NoConvergence(f"no bracket below ({y}, {z})")
    else:
        while h(hi) <= 0.0:
            hi *= 0.5
            if hi > -1e-300:
                raise NoConvergence(f"no bracket above ({y}, {z})")
    s = _solve(h, lo, hi)
    return s, _t_on_branch(m, s, z, -1)


class PsiK(NamedTuple):
    Psi: float
    K: float
    Jac: float
    s: float
    t: float
    s_K: float


def psi_K(m: ModelParams, y: float, z: float) -> PsiK:
    s, t = invert_ray(m, y, z)
    if s == 0.0:
        raise OnCaustic(f"({y}, {z}) lies on y = Y0(z); use the transition layer")
    st = forward_ray(m, s, t)
    # y is exact here; only the root-finding error in s enters Psi
    psi = 2.0 * y * s + (m.log_rho - s * t) * (z - 1.0) + m.log_rho
    return PsiK(Psi=psi, K=st.amp, Jac=st.jac, s=s, t=t, s_K=st.s_amp)


def _exact_zero(m: ModelParams, x: float, k: int, method: str) -> EvalResult:
    return make_result(m, x, k, method, -math.inf, log_tail=log_stationary_pk(m, k),
                       log_p=log_stationary_pk(m, k), exact_zero=True)


def G_asymptotic(m: ModelParams, x: float, k: int) -> EvalResult:
    """Leading-order ray expansion of F_k(x).

    Below Y0 (s > 0) the expansion is F itself; elsewhere (s < 0) it is the
    deficit F_k(inf) - F, which is returned as ``log_tail``.
    """
    pt = scaled_point(m, x, k)
    if x == 0.0 and k > m.floor_c:
        return _exact_zero(m, x, k, "ray")
    if pt.z > 1.0 and pt.y == 0.0:
        raise WrongRegion("ray expansion undefined at x = 0 for k > c")
    try:
        pk = psi_K(m, pt.y, pt.z)
    except OnCaustic as exc:
        raise OnCaustic(f"G_asymptotic: {exc}") from exc
    log_amp = 0.5 * math.log(m.eps) + pk.Psi / m.eps + math.log(pk.s_K) - math.log(abs(pk.s))
    lp = log_stationary_pk(m, k)
    region = classify_region(m, pt)
    diag = dict(s=pk.s, t=pk.t, Psi=pk.Psi, jac=pk.Jac)
    if pk.s > 0.0:
        return make_result(m, x, k, "ray", log_amp, log_p=lp, region=region, **diag)
    if log_amp >= lp:
        raise ExpansionBreakdown(
            f"G_asymptotic: correction exceeds F_k(inf) at x={x}, k={k} (s={pk.s:.3g})")
    return make_result(m, x, k, "ray", log_from_tail(lp, log_amp), log_tail=log_amp,
                       log_p=lp, region=region, **diag)


# Density f_k(x) = dF_k/dx. In scaled form f = eps^2 dG/dy and dPsi/dy = s, so
# the leading term is eps^{3/2} s K e^{Psi/eps} on either side of Y0.

def _log_density_ray(m: ModelParams, y: float, z: float) -> float:
    if z > 1.0 and y == 0.0:
        return -math.inf
    s, t = invert_ray(m, y, z)
    st = forward_ray(m, s, t)
    psi = 2.0 * y * s + (m.log_rho - s * t) * (z - 1.0) + m.log_rho
    return 1.5 * math.log(m.eps) + psi / m.eps + math.log(st.s_amp)


def _log_density_gaussian(m: ModelParams, y: float, z: float, published: bool = False) -> float:
    """Gaussian profile across Y0 for z > 1.

    The default exponent -chi (y - Y0)^2 / (2 eps) is the one that integrates
    to F_k(inf) and agrees with the ray form near s = 0; ``published=True``
    uses -chi (y - Y0)^2 / eps instead.
    """
    if z <= 1.0:
        raise WrongRegion("Gaussian density form needs z > 1")
    chi = 3.0 * m.drift_gap ** 3 / (m.total_rate * (z - 1.0) ** 3)
    dy = y - y0_curve(m, z)
    spread = 1.0 if published else 2.0
    return (1.5 * math.log(m.eps) + math.log(1.0 - m.rho) + 0.5 * math.log(chi / (2.0 * math.pi))
            + (z * m.log_rho - chi * dy * dy / spread) / m.eps)


def _log_density_near_one(m: ModelParams, y: float, z: float) -> float:
    if y <= 0.0:
        raise WrongRegion("near-z=1 density form needs y > 0")
    zeta = m.zeta
    expo = (m.log_rho - 2.0 * zeta * math.sqrt(y)
            - zeta * (z - 1.0) ** 2 / (2.0 * math.sqrt(y) * m.drift_gap))
    return (1.5 * math.log(m.eps) + math.log((1.0 - m.rho) / 2.0)
            + 0.5 * math.log(zeta / math.pi) - 0.75 * math.log(y) + expo / m.eps)


DENSITY_FORMS = {
    "ray": _log_density_ray,
    "gaussian": _log_density_gaussian,
    "gaussian-published": functools.partial(_log_density_gaussian, published=True),
    "near-one": _log_density_near_one,
}


def log_density(m: ModelParams, y: float, z: float, form: str = "ray") -> float:
    """log f in scaled coordinates; z may be any real in the domain."""
    try:
        fn = DENSITY_FORMS[form]
    except KeyError:
        raise DomainError(f"unknown density form {form!r}") from None
    return fn(m, y, z)


def density_asymptotic(m: ModelParams, x: float, k: int, form: str = "ray") -> tuple[float, float]:
    """Return (density, log density) of F_k at x."""
    if x <= 0.0 and form != "ray":
        raise WrongRegion("density forms other than the ray form need x > 0")
    lv = log_density(m, x * m.eps ** 2, k * m.eps, form)
    return (math.exp(lv) if lv > -745.0 else 0.0), lv


@dataclass(frozen=True)
class InfinityRay:
    """A ray entering from y = +inf: Y(z) = y0 + [(z-1)^2 - (z0-1)^2] / (2 (mu - lam))."""

    y0: float
    z0: float
    drift_gap: float

    def __call__(self, z: float) -> float:
        return self.y0 + ((z - 1.0) ** 2 - (self.z0 - 1.0) ** 2) / (2.0 * self.drift_gap)


def rays_from_infinity(m: ModelParams, y0: float, z0: float) -> InfinityRay:
    if y0 * z0 != 0.0:
        raise DomainError("rays from infinity start on an axis: need y0 * z0 = 0")
    if y0 < 0.0 or z0 < 0.0:
        raise DomainError("start point must lie in the quarter plane")
    if z0 > 1.0 and y0 < y0_curve(m, z0):
        raise DomainError("start point lies in the shadow of the rays from infinity")
    return InfinityRay(y0=y0, z0=z0, drift_gap=m.drift_gap)


def in_region_R(m: ModelParams, y: float, z: float) -> bool:
    """True where rays from infinity reach: z <= 1, or y >= Y0(z)."""
    return z <= 1.0 or y >= y0_curve(m, z)
