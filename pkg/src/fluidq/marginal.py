"""Buffer-content tail M(x) = Pr[X > x]: the x = O(1) pole sum and the x = O(c^2) form."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import DomainError, TruncationFailure
from .model import ModelParams


@dataclass(frozen=True)
class MarginalResult:
    x: float
    M: float
    log_M: float
    method: str
    oracle_log_M: float | None = None
    rel_log_err: float | None = None
    diagnostics: dict[str, Any] = field(default_factory=dict)

    def with_oracle(self, oracle: "MarginalResult") -> "MarginalResult":
        err = (abs(self.log_M - oracle.log_M) / abs(oracle.log_M)
               if oracle.log_M != 0.0 else math.inf)
        return replace(self, oracle_log_M=oracle.log_M, rel_log_err=err)


def _result(x: float, log_M: float, method: str, **diag: Any) -> MarginalResult:
    return MarginalResult(x=x, M=math.exp(log_M) if log_M > -745.0 else 0.0, log_M=log_M,
                          method=method, diagnostics=diag)


def marginal_m1(m: ModelParams, x: float, tol: float = 1e-15, jmax: int | None = None) -> MarginalResult:
    """Pole sum for Pr[X > x] with x of order one."""
    if x < 0.0:
        raise DomainError(f"x must be >= 0, got {x}")
    rho, alpha = m.rho, m.alpha
    if jmax is None:
        q = math.e * rho * math.exp((1.0 - 3.0 * rho) / (1.0 + rho))
        jmax = max(500, int(1.5 * math.log(tol) / math.log(q)) + 50) if q < 1.0 else 200_000
    j = np.arange(jmax, dtype=float)
    w = j + 1.0 - alpha
    log_terms = (j * np.log(w) - gammaln(j + 1.0) + j * m.log_rho
                 - x * m.total_rate / w + (1.0 - 3.0 * rho) / (rho + 1.0) * w)
    total = logsumexp(log_terms)
    if np.any(log_terms[-3:] > total + math.log(tol)):
        raise TruncationFailure(f"marginal_m1: sum not converged in {jmax} terms at x={x}")
    log_pref = (math.log1p(-rho) + (m.c - alpha + 1.0) * m.log_rho
                + 0.5 * math.log((1.0 - rho) / (1.0 + rho)))
    return _result(x, log_pref + float(total), "M1", terms=jmax)


def marginal_m2(m: ModelParams, x: float) -> MarginalResult:
    """Laplace evaluation of the ray expansion for x of order c^2."""
    if not x > 0.0:
        raise DomainError(f"marginal_m2 needs x > 0, got {x}")
    y = x * m.eps ** 2
    log_M = (0.5 * math.log(m.drift_gap / 2.0) + math.log((1.0 - m.rho) / m.zeta)
             + (-2.0 * m.zeta * math.sqrt(y) + m.log_rho) / m.eps)
    return _result(x, log_M, "M2")


def blend_window(m: ModelParams) -> tuple[float, float]:
    return math.sqrt(m.c), m.c ** 1.5


def marginal_auto(m: ModelParams, x: float) -> MarginalResult:
    """M1 below sqrt(c), M2 above c^{3/2}, linear in log x between (a heuristic blend)."""
    lo, hi = blend_window(m)
    if x <= lo:
        return marginal_m1(m, x)
    if x >= hi:
        return marginal_m2(m, x)
    w = (math.log(x) - math.log(lo)) / (math.log(hi) - math.log(lo))
    a, b = marginal_m1(m, x), marginal_m2(m, x)
    return _result(x, (1.0 - w) * a.log_M + w * b.log_M, "blend", weight_m2=w,
                   log_M1=a.log_M, log_M2=b.log_M)
