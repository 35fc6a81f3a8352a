"""Exact corner-layer solution near (x, k) = (O(1), c) and its saddle-point limit.

The corner problem is

    (l - alpha) Phi_l'(x) = A Phi_{l+1} + C Phi_{l-1} - B Phi_l,
    Phi_l(0) = 0 for l >= 1,  Phi_l(inf) = mu_inf r^l,

whose solution is a sum over the poles theta_j = -B / (j + 1 - alpha) with
Gamma/Bessel residues. For the buffer model A = mu, B = lam + mu, C = lam.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import mpmath as mp

from ._backend import kernels
from .errors import (
    DomainError, ExpansionBreakdown, NearCaustic, NoConvergence, TruncationFailure,
)
from .model import (
    EvalResult, ModelParams, classify_region, log_from_tail, make_result, scaled_point,
)

ALPHA_RANGE = (0.02, 0.98)
JMAX_FLOOR = 500


@dataclass(frozen=True)
class CornerSpec:
    A: float
    B: float
    C: float
    alpha: float
    mu_inf: float

    def __post_init__(self):
        if not (self.A > 0.0 and self.C > 0.0 and self.B > 2.0 * math.sqrt(self.A * self.C)):
            raise DomainError(f"need B > 2 sqrt(AC) > 0, got A={self.A}, B={self.B}, C={self.C}")
        if not 0.0 < self.alpha < 1.0:
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not ALPHA_RANGE[0] <= self.alpha <= ALPHA_RANGE[1]:
            warnings.warn(f"alpha={self.alpha} is close to an integer output rate; "
                          "the corner sum converges slowly and loses accuracy", stacklevel=3)

    @property
    def beta(self) -> float:
        return 2.0 * math.sqrt(self.A * self.C)

    @property
    def Delta(self) -> float:
        return math.sqrt(self.B * self.B - 4.0 * self.A * self.C)

    @property
    def r(self) -> float:
        """Root of A r^2 - B r + C = 0 inside (0, 1)."""
        return 2.0 * self.C / (self.B + self.Delta)

    def theta(self, j: int) -> float:
        return -self.B / (j + 1.0 - self.alpha)

    @property
    def term_ratio(self) -> float:
        """Asymptotic ratio of consecutive spectral terms at x = 0."""
        u = self.Delta / self.B
        return math.exp(2.0 * u) * (1.0 - u) / (1.0 + u)


def corner_spec_from_model(m: ModelParams) -> CornerSpec:
    return CornerSpec(A=m.mu, B=m.total_rate, C=m.lam, alpha=m.alpha,
                      mu_inf=(1.0 - m.rho) * m.rho ** (m.c - m.alpha))


def default_jmax(spec: CornerSpec, tol: float) -> int:
    """Enough terms for the geometric tail to fall below tol, never fewer than 500."""
    q = spec.term_ratio
    need = int(1.5 * math.log(tol) / math.log(q)) + 50
    return max(JMAX_FLOOR, min(need, 200_000))


def corner_sum(spec: CornerSpec, l: int, x: float, tol: float = 1e-15,
               jmax: int | None = None, derivative: bool = False) -> tuple[float, int]:
    """The pole sum S with Phi_l = mu_inf r^l - mu_inf (C/A)^{l/2} sqrt(Delta/B) S."""
    if x < 0.0:
        raise DomainError(f"x must be >= 0, got {x}")
    if jmax is None:
        jmax = default_jmax(spec, tol)
    total, used, ok = kernels.corner_series(int(l), float(x), spec.alpha, spec.A, spec.B,
                                            spec.C, tol, int(jmax), bool(derivative))
    if not ok:
        raise TruncationFailure(f"corner sum for l={l}, x={x} not converged in {jmax} terms")
    return total, used


def _prefactor_log(spec: CornerSpec, l: int) -> float:
    return (math.log(spec.mu_inf) + 0.5 * l * math.log(spec.C / spec.A)
            + 0.5 * math.log(spec.Delta / spec.B))


def phi_spectral(spec: CornerSpec, l: int, x: float, tol: float = 1e-15,
                 jmax: int | None = None, derivative: bool = False) -> float:
    """Phi_l(x), or its x-derivative when ``derivative`` is set."""
    S, _ = corner_sum(spec, l, x, tol, jmax, derivative)
    pref = math.exp(_prefactor_log(spec, l))
    if derivative:
        return -pref * S
    return spec.mu_inf * spec.r ** l - pref * S


def phi_log(spec: CornerSpec, l: int, x: float, tol: float = 1e-15,
            jmax: int | None = None) -> tuple[float, float]:
    """(log Phi_l(x), log of the deficit mu_inf r^l - Phi_l(x))."""
    S, _ = corner_sum(spec, l, x, tol, jmax)
    log_limit = math.log(spec.mu_inf) + l * math.log(spec.r)
    if S <= 0.0:
        return log_limit, -math.inf
    log_def = _prefactor_log(spec, l) + math.log(S)
    return log_from_tail(log_limit, log_def), log_def


def phi_log_mp(spec: CornerSpec, l: int, x: float, dps: int = 40,
               model: ModelParams | None = None) -> tuple[float, float, str | None]:
    """Same as phi_log but summed in mpmath at ``dps`` digits.

    Needed when the deficit is far below double-precision resolution of Phi.
    The third entry is the log-deficit as a decimal string at working precision.
    With ``model`` given, B = lam + mu and mu_inf are formed in mpmath from the
    rates rather than taken from their rounded double values.
    """
    with mp.workdps(dps):
        A, B, C = mp.mpf(spec.A), mp.mpf(spec.B), mp.mpf(spec.C)
        mu_inf = mp.mpf(spec.mu_inf)
        if model is not None:
            A, C = mp.mpf(model.mu), mp.mpf(model.lam)
            B = A + C
            mu_inf = (1 - C / A) * (C / A) ** model.floor_c
        alpha, xx = mp.mpf(spec.alpha), mp.mpf(x)
        beta = 2 * mp.sqrt(A * C)
        delta = mp.sqrt(B * B - beta * beta)
        log_ratio = mp.log((B - delta) / beta)
        tol = mp.mpf(10) ** (-(dps - 5))
        jmax = default_jmax(spec, float(tol))
        total = mp.mpf(0)
        small = 0
        for j in range(jmax):
            w = j + 1 - alpha
            theta = -B / w
            lt = j * mp.log(w) - mp.loggamma(j + 1) + (j + 1) * log_ratio + xx * theta + (B - delta) / theta
            term = mp.exp(lt) * mp.besselj(l - j - 1, beta / theta)
            total += term
            if abs(term) < tol * abs(total):
                small += 1
                if small >= 3:
                    break
            else:
                small = 0
        else:
            raise TruncationFailure(f"mp corner sum for l={l}, x={x} not converged")
        r = 2 * C / (B + delta)
        limit = mu_inf * r ** l
        deficit = mu_inf * (C / A) ** (mp.mpf(l) / 2) * mp.sqrt(delta / B) * total
        phi = limit - deficit
        log_def = mp.log(deficit) if deficit > 0 else mp.ninf
        log_phi = float(mp.log(phi)) if phi > 0 else -math.inf
        digits = mp.nstr(log_def, dps - 5) if deficit > 0 else None
    return log_phi, float(log_def), digits


def corner_F(m: ModelParams, l: int, x: float, dps: int | None = None,
             tol: float = 1e-15) -> EvalResult:
    """F_k(x) for k = floor(c) + l from the exact corner solution.

    ``dps`` switches to the multiprecision sum.
    """
    k = l + m.floor_c
    if k < 0:
        raise DomainError(f"k = floor(c) + l must be >= 0, got {k}")
    spec = corner_spec_from_model(m)
    pt = scaled_point(m, x, k)
    log_limit = math.log(spec.mu_inf) + l * math.log(spec.r)
    if x == 0.0 and l >= 1:
        return make_result(m, x, k, "corner", -math.inf, log_tail=log_limit, log_p=log_limit,
                           region=classify_region(m, pt), exact_zero=True)
    digits = None
    if dps is None:
        log_phi, log_def = phi_log(spec, l, x, tol)
    else:
        log_phi, log_def, digits = phi_log_mp(spec, l, x, dps, model=m)
    return make_result(m, x, k, "corner", log_phi, log_tail=log_def, log_p=log_limit,
                       region=classify_region(m, pt), log_tail_digits=digits)


# Saddle-point machinery. g is analytic on eta > beta, with a removable
# singularity at eta = B where its numerator vanishes to second order, so it is
# evaluated in extended precision there.

_SADDLE_DPS = 50


def _g_parts_mp(spec: CornerSpec, eta, Omega):
    B, D = mp.mpf(spec.B), mp.mpf(spec.Delta)
    beta = mp.sqrt(B * B - D * D)
    p = mp.sqrt(eta * eta - beta * beta)
    d = eta - B
    if d == 0:
        g = mp.log((B - D) / beta)
        g1 = (Omega - 1) / (2 * D)
        g2 = B / (3 * D ** 3)
        return g, g1, g2, p
    numer = p + eta * mp.log((eta - p) / beta) - D - B * mp.log((B - D) / beta)
    M = D + B * mp.log((B - D) / (eta - p)) - p
    g = d * Omega / (2 * D) + numer / d
    g1 = Omega / (2 * D) + M / d ** 2
    g2 = -1 / (p * d) - 2 * M / d ** 3
    return g, g1, g2, p


def _check_eta(spec: CornerSpec, eta: float) -> None:
    if not eta > spec.beta:
        raise DomainError(f"eta must exceed beta = {spec.beta:.6g}, got {eta}")


def saddle_g(spec: CornerSpec, eta: float, Omega: float) -> tuple[float, float, float]:
    """(g(eta), g'(eta), p(eta)) for the saddle exponent.

    Defined for every eta > beta, including eta = B by continuity; left of B
    it describes the saddle for Omega > 1.
    """
    _check_eta(spec, eta)
    if not Omega > 0.0:
        raise DomainError(f"Omega must be > 0, got {Omega}")
    with mp.workdps(_SADDLE_DPS):
        g, g1, _, p = _g_parts_mp(spec, mp.mpf(eta), mp.mpf(Omega))
        return float(g), float(g1), float(p)


def saddle_g2(spec: CornerSpec, eta: float, Omega: float) -> float:
    _check_eta(spec, eta)
    with mp.workdps(_SADDLE_DPS):
        return float(_g_parts_mp(spec, mp.mpf(eta), mp.mpf(Omega))[2])


@dataclass(frozen=True)
class OmegaDiagnostics:
    Omega: float
    eta_star: float
    g_at_star: float
    g2_at_star: float
    g1_residual: float


def expansion_coefficients(spec: CornerSpec) -> tuple[float, float]:
    """(a1, a2) in eta*(Omega) = B + a1 (Omega-1) + a2 (Omega-1)^2 + ..."""
    B, D = spec.B, spec.Delta
    return -1.5 * D * D / B, -27.0 * D * D / (32.0 * B ** 3) * (D * D - 3.0 * B * B)


def omega_max(spec: CornerSpec) -> float:
    """Largest Omega whose saddle sits left of B before hitting the branch point beta."""
    B, D, beta = spec.B, spec.Delta, spec.beta
    M_beta = D + B * math.log((B - D) / beta)
    return -2.0 * D * M_beta / (B - beta) ** 2


def saddle_eta_star(spec: CornerSpec, Omega: float) -> OmegaDiagnostics:
    """Root of g'(eta) = 0 by Newton from B + a1 (Omega - 1), bisection as fallback.

    Omega < 1 puts the root right of B; Omega > 1 left of it.
    """
    if not Omega > 0.0:
        raise DomainError(f"Omega must be > 0, got {Omega}")
    if Omega >= omega_max(spec):
        raise ExpansionBreakdown(f"saddle reaches the branch point for Omega={Omega:.4g} "
                                 f">= {omega_max(spec):.4g}")
    a1, a2 = expansion_coefficients(spec)
    with mp.workdps(_SADDLE_DPS):
        Om = mp.mpf(Omega)
        B = mp.mpf(spec.B)
        if Omega == 1.0:
            eta = B
        else:
            eta = B + a1 * (Om - 1) + a2 * (Om - 1) ** 2
            ok = False
            for _ in range(100):
                if not eta > spec.beta:
                    break
                _, g1, g2, _ = _g_parts_mp(spec, eta, Om)
                step = g1 / g2
                eta -= step
                if abs(step) < mp.mpf(10) ** (-30) * abs(eta):
                    ok = True
                    break
            if not ok or (eta - B) * (1 - Om) <= 0:
                eta = _bisect_eta(spec, Om)
        g, g1, g2, _ = _g_parts_mp(spec, eta, Om)
        return OmegaDiagnostics(Omega=Omega, eta_star=float(eta), g_at_star=float(g),
                                g2_at_star=float(g2), g1_residual=float(abs(g1)))


def _bisect_eta(spec: CornerSpec, Om):
    B = mp.mpf(spec.B)
    if Om < 1:
        lo, hi = B * (1 + mp.mpf(10) ** -30), 10 * B
    else:
        lo, hi = mp.mpf(spec.beta) * (1 + mp.mpf(10) ** -30), B * (1 - mp.mpf(10) ** -30)
    f = lambda e: _g_parts_mp(spec, e, Om)[1]
    flo, fhi = f(lo), f(hi)
    if flo * fhi > 0:
        raise NoConvergence(f"saddle_eta_star: no sign change of g' for Omega={float(Om)}")
    for _ in range(400):
        mid = (lo + hi) / 2
        fm = f(mid)
        if fm * flo > 0:
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo < mp.mpf(10) ** -40 * B:
            break
    return (lo + hi) / 2


def omega_of(m: ModelParams, l: int, x: float) -> float:
    return 2.0 * m.drift_gap * x / (l - m.alpha) ** 2


def corner_saddle_form(m: ModelParams, l: int, x: float) -> float:
    """Saddle-point value with the exact eta*(Omega).

    For Omega < 1 this approximates Phi_l(x); for Omega > 1 it approximates
    Phi_l(x) - mu_inf r^l (negative).
    """
    if l - m.alpha <= 0:
        raise DomainError("saddle form needs l > alpha")
    spec = corner_spec_from_model(m)
    Om = omega_of(m, l, x)
    if abs(Om - 1.0) < 1e-12:
        raise NearCaustic("saddle form is singular at Omega = 1")
    diag = saddle_eta_star(spec, Om)
    n = l - m.alpha
    eta = diag.eta_star
    p = math.sqrt(eta * eta - spec.beta ** 2)
    log_mag = (math.log(spec.mu_inf) + m.alpha * math.log(spec.r) + 0.5 * math.log(spec.Delta)
               + 0.5 * n * math.log(spec.C / spec.A) - 0.5 * math.log(2.0 * math.pi * n)
               - math.log(abs(eta - spec.B)) + n * diag.g_at_star
               - 0.5 * math.log(p * diag.g2_at_star))
    return math.copysign(math.exp(log_mag), eta - spec.B)


def corner_matching_form(m: ModelParams, l: int, x: float) -> float:
    """Closed-form limit of the saddle value as Omega -> 1.

    -(1-rho) rho^k sqrt(2 (mu+lam) / (3 pi (mu-lam) (l-alpha))) / (Omega - 1)
    """
    Om = omega_of(m, l, x)
    if abs(Om - 1.0) < 0.05:
        raise NearCaustic(f"matching form needs |Omega - 1| >= 0.05, got Omega={Om:.4g}")
    k = l + m.floor_c
    n = l - m.alpha
    amp = (1.0 - m.rho) * math.exp(k * m.log_rho) * math.sqrt(
        2.0 * m.total_rate / (3.0 * math.pi * m.drift_gap * n))
    return -amp / (Om - 1.0)
