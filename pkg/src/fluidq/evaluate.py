"""Choose and run the expansion appropriate to a point."""

from __future__ import annotations

import functools

from .corner import corner_F
from .errors import DomainError, NumericalError
from .layers import boundary_x0_F, boundary_z0_F, transition_F
from .model import EvalResult, ModelParams, RegionLabel, classify_region, scaled_point
from .oracle import SpectralSolution, oracle_F, solve_exact
from .rays import G_asymptotic

METHODS = ("auto", "ray", "corner", "transition", "boundary-z0", "boundary-x0", "oracle")

REGION_METHOD = {
    RegionLabel.CORNER: "corner",
    RegionLabel.TRANSITION: "transition",
    RegionLabel.BOUNDARY_X0: "boundary-x0",
    RegionLabel.BOUNDARY_Z0: "boundary-z0",
    RegionLabel.INTERIOR: "ray",
    RegionLabel.SHADOW: "ray",
}

# tried in turn when the designated method fails at a point
FALLBACKS = ("ray", "transition", "corner")


@functools.lru_cache(maxsize=16)
def cached_solution(m: ModelParams, K_trunc: int | None = None, dps: int | None = 50) -> SpectralSolution:
    return solve_exact(m, K_trunc, dps)


def run_method(m: ModelParams, method: str, x: float, k: int, corner_dps: int | None = None,
               solution: SpectralSolution | None = None) -> EvalResult:
    if method == "ray":
        return G_asymptotic(m, x, k)
    if method == "corner":
        return corner_F(m, k - m.floor_c, x, dps=corner_dps)
    if method == "transition":
        return transition_F(m, x, k)
    if method == "boundary-z0":
        return boundary_z0_F(m, x, k)
    if method == "boundary-x0":
        return boundary_x0_F(m, x, k)
    if method == "oracle":
        return oracle_F(solution or cached_solution(m), x, k)
    raise DomainError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")


def evaluate(m: ModelParams, x: float, k: int, method: str = "auto",
             corner_dps: int | None = None, solution: SpectralSolution | None = None) -> EvalResult:
    """F_k(x) by the requested method; ``auto`` follows the region label.

    Under ``auto`` a method that fails at the point hands over to the next
    entry of FALLBACKS, and the failure is recorded in the diagnostics.
    """
    pt = scaled_point(m, x, k)
    region = classify_region(m, pt)
    if method != "auto":
        return run_method(m, method, x, k, corner_dps, solution)
    first = REGION_METHOD[region]
    errors: list[str] = []
    for name in (first,) + tuple(f for f in FALLBACKS if f != first):
        try:
            res = run_method(m, name, x, k, corner_dps, solution)
        except NumericalError as exc:
            errors.append(f"{name}: {exc}")
            continue
        if errors:
            res.diagnostics["fallback_from"] = "; ".join(errors)
        return res
    raise NumericalError(f"evaluate: every method failed at x={x}, k={k}: " + "; ".join(errors))


def compare(m: ModelParams, x: float, k: int, method: str = "auto",
            solution: SpectralSolution | None = None, corner_dps: int | None = None) -> EvalResult:
    """Evaluate and attach the oracle value and log-relative error.

    The corner sum runs at the oracle's precision unless ``corner_dps`` is given,
    so that both deficits are resolved to the same depth.
    """
    sol = solution or cached_solution(m)
    dps = corner_dps if corner_dps is not None else sol.dps
    res = evaluate(m, x, k, method, corner_dps=dps, solution=sol)
    return res.with_oracle(oracle_F(sol, x, k))
