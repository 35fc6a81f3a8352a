"""Model parameters, scalings, and region classification."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Any

import mpmath as mp

from .errors import BadRates, DomainError, IntegerOutputRate, UnstableModel

INTEGER_TOL = 1e-6
X0_LAYER_UMAX = 3.0


@dataclass(frozen=True)
class ModelParams:
    lam: float
    mu: float
    c: float
    rho: float
    eps: float
    alpha: float
    zeta: float
    floor_c: int
    stable: bool = True

    @property
    def log_rho(self) -> float:
        return math.log(self.rho)

    @property
    def drift_gap(self) -> float:
        """mu - lambda, the speed of the separating ray."""
        return self.mu - self.lam

    @property
    def total_rate(self) -> float:
        return self.lam + self.mu


def new_model(lam: float, mu: float, c: float) -> ModelParams:
    """Validate rates and build a ModelParams with all derived scalars."""
    for name, v in (("lambda", lam), ("mu", mu), ("c", c)):
        if not math.isfinite(v) or v <= 0:
            raise BadRates(f"{name} must be a positive finite number, got {v!r}")
    if lam >= mu:
        raise BadRates(f"need lambda < mu for rho < 1, got lambda={lam}, mu={mu}")
    if abs(c - round(c)) < INTEGER_TOL:
        raise IntegerOutputRate(f"output rate c={c} is an integer; c must be non-integer")
    rho = lam / mu
    if rho / (1.0 - rho) >= c:
        raise UnstableModel(
            f"unstable: rho/(1-rho) = {rho / (1.0 - rho):.6g} >= c = {c}")
    zeta2 = 2.0 * (lam - mu) - (lam + mu) * math.log(rho)
    # positive for every rho in (0, 1); a failure here means corrupted inputs
    assert zeta2 > 0.0, zeta2
    floor_c = math.floor(c)
    return ModelParams(lam=lam, mu=mu, c=c, rho=rho, eps=1.0 / c,
                       alpha=c - floor_c, zeta=math.sqrt(zeta2), floor_c=floor_c)


def stationary_pk(m: ModelParams, k: int) -> float:
    if k < 0:
        raise DomainError(f"k must be >= 0, got {k}")
    return (1.0 - m.rho) * m.rho ** k


def log_stationary_pk(m: ModelParams, k: float) -> float:
    return math.log1p(-m.rho) + k * m.log_rho


@dataclass(frozen=True)
class ScaledPoint:
    x: float
    k: int
    y: float
    z: float
    l: int
    u: float


def scaled_point(m: ModelParams, x: float, k: int) -> ScaledPoint:
    if x < 0 or k < 0:
        raise DomainError(f"need x >= 0 and k >= 0, got x={x}, k={k}")
    return ScaledPoint(x=x, k=k, y=x * m.eps * m.eps, z=k * m.eps,
                       l=k - m.floor_c, u=x * m.eps)


class RegionLabel(str, enum.Enum):
    CORNER = "Corner"
    TRANSITION = "TransitionStrip"
    SHADOW = "ShadowRC"
    INTERIOR = "InteriorR"
    BOUNDARY_Z0 = "BoundaryZ0"
    BOUNDARY_X0 = "BoundaryX0"


def y0_curve(m: ModelParams, z: float) -> float:
    """Separating curve between the shadow region and the rest."""
    if z < 1.0:
        raise DomainError(f"Y0(z) needs z >= 1, got {z}")
    return (z - 1.0) ** 2 / (2.0 * m.drift_gap)


def similarity_width(m: ModelParams, z: float, published: bool = False) -> float:
    """Width r(z) of the error-function layer around Y0(z), in units of sqrt(eps).

    The default keeps the factor 1/2 of the second difference when the layer
    equation is reduced to a diffusion equation, giving
    r^2 = (mu+lam)(z-1)^3 / (3 (mu-lam)^3). ``published=True`` returns the
    width with 2/3 in place of 1/3.
    """
    if z < 1.0:
        raise DomainError(f"r(z) needs z >= 1, got {z}")
    factor = 2.0 if published else 1.0
    return math.sqrt(factor * m.total_rate / (3.0 * m.drift_gap ** 3)) * (z - 1.0) ** 1.5


def classify_region(m: ModelParams, pt: ScaledPoint) -> RegionLabel:
    """Label a point by the expansion that should describe it.

    Checked in order: corner, transition strip, x = 0 layer, z = 0 layer,
    then the ray regions on either side of Y0.
    """
    sqrt_c = math.sqrt(m.c)
    sqrt_eps = math.sqrt(m.eps)
    if abs(pt.k - m.c) <= sqrt_c and pt.x <= sqrt_c:
        return RegionLabel.CORNER
    if pt.z > 1.0:
        y0 = y0_curve(m, pt.z)
        if abs(pt.y - y0) <= 3.0 * sqrt_eps * similarity_width(m, pt.z):
            return RegionLabel.TRANSITION
        if pt.z > 1.0 + sqrt_eps and pt.u <= X0_LAYER_UMAX:
            return RegionLabel.BOUNDARY_X0
    if pt.k <= max(5.0, sqrt_c) and pt.y > m.eps:
        return RegionLabel.BOUNDARY_Z0
    if pt.z <= 1.0 or pt.y >= y0_curve(m, pt.z):
        return RegionLabel.INTERIOR
    return RegionLabel.SHADOW


@dataclass(frozen=True)
class EvalResult:
    """One evaluated probability, always carried in log-space.

    ``log_tail`` is log(F_k(inf) - F) when the method produces the deficit
    directly; errors between two such results are then taken on the deficit,
    which keeps them meaningful when F is within rounding of its limit.
    """

    x: float
    k: int
    y: float
    z: float
    region: RegionLabel | None
    method: str
    log_F: float
    F: float
    log_tail: float | None = None
    log_tail_digits: str | None = None
    log_p: float | None = None
    oracle_log_F: float | None = None
    rel_log_err: float | None = None
    diagnostics: dict[str, Any] = field(default_factory=dict)

    def with_oracle(self, oracle: "EvalResult") -> "EvalResult":
        return replace(self, oracle_log_F=oracle.log_F,
                       rel_log_err=log_relative_error(self, oracle))

    def to_dict(self) -> dict[str, Any]:
        return {
            "x": self.x, "k": self.k, "y": self.y, "z": self.z,
            "region": self.region.value if self.region is not None else None,
            "method": self.method, "log_F": self.log_F, "F": self.F,
            "log_tail": self.log_tail, "log_tail_digits": self.log_tail_digits,
            "log_p": self.log_p,
            "oracle_log_F": self.oracle_log_F, "rel_log_err": self.rel_log_err,
            "diagnostics": dict(self.diagnostics),
        }


def make_result(m: ModelParams, x: float, k: int, method: str, log_F: float,
                log_tail: float | None = None, log_p: float | None = None,
                region: RegionLabel | None = None, log_tail_digits: str | None = None,
                **diagnostics: Any) -> EvalResult:
    F = math.exp(log_F) if log_F > -745.0 else 0.0
    return EvalResult(x=x, k=k, y=x * m.eps ** 2, z=k * m.eps, region=region,
                      method=method, log_F=log_F, F=F, log_tail=log_tail,
                      log_tail_digits=log_tail_digits,
                      log_p=log_p, diagnostics=diagnostics)


def log_from_tail(log_p: float, log_tail: float) -> float:
    """log(p - exp(log_tail)) for a positive deficit smaller than p."""
    r = log_tail - log_p
    if r >= 0.0:
        return -math.inf
    return log_p + math.log1p(-math.exp(r))


def log_relative_error(a: EvalResult, b: EvalResult) -> float:
    """|log F_a - log F_b| / |log F_b|, computed through the deficits when both have them."""
    if b.log_F == 0.0:
        return math.inf
    if a.log_tail is not None and b.log_tail is not None and b.log_p is not None:
        # log1p(-e^ta) - log1p(-e^tb) without forming either difference
        ta, tb = a.log_tail - b.log_p, b.log_tail - b.log_p
        if ta < 0.0 and tb < 0.0 and a.log_tail_digits and b.log_tail_digits:
            # both deficits known beyond double precision: difference them there
            with mp.workdps(60):
                dt = mp.mpf(a.log_tail_digits) - mp.mpf(b.log_tail_digits)
                eb = mp.exp(mp.mpf(tb))
                diff = mp.log1p(-eb * mp.expm1(dt) / (1 - eb))
                return float(abs(diff)) / abs(b.log_F)
        if ta < 0.0 and tb < 0.0:
            eb = math.exp(tb)
            diff = math.log1p(-eb * math.expm1(ta - tb) / (1.0 - eb))
            return abs(diff) / abs(b.log_F)
    if math.isinf(a.log_F) and math.isinf(b.log_F):
        return 0.0
    return abs(a.log_F - b.log_F) / abs(b.log_F)

