"""Asymptotic and exact stationary distributions of a fluid buffer fed by M/M/1 sources."""

from ._backend import BACKEND
from .corner import (
    CornerSpec, OmegaDiagnostics, corner_F, corner_matching_form, corner_saddle_form,
    corner_spec_from_model, phi_spectral, saddle_eta_star, saddle_g,
)
from .errors import (
    BadRates, DomainError, FluidQError, IntegerOutputRate, ModelError, NumericalError,
    UnstableModel, WrongRegion,
)
from .evaluate import compare, evaluate
from .layers import boundary_x0_F, boundary_z0_F, solve_xi, transition_F
from .marginal import MarginalResult, marginal_auto, marginal_m1, marginal_m2
from .model import (
    EvalResult, ModelParams, RegionLabel, ScaledPoint, classify_region, new_model,
    scaled_point, stationary_pk, y0_curve,
)
from .oracle import (
    SimConfig, SpectralSolution, oracle_F, oracle_marginal, simulate, solve_exact,
)
from .rays import G_asymptotic, density_asymptotic, forward_ray, invert_ray, psi_K

__all__ = [
    "BACKEND", "BadRates", "CornerSpec", "DomainError", "EvalResult", "FluidQError",
    "G_asymptotic", "IntegerOutputRate", "MarginalResult", "ModelError", "ModelParams",
    "NumericalError", "OmegaDiagnostics", "RegionLabel", "ScaledPoint", "SimConfig",
    "SpectralSolution", "UnstableModel", "WrongRegion", "boundary_x0_F", "boundary_z0_F",
    "classify_region", "compare", "corner_F", "corner_matching_form", "corner_saddle_form",
    "corner_spec_from_model", "density_asymptotic", "evaluate", "forward_ray", "invert_ray",
    "marginal_auto", "marginal_m1", "marginal_m2", "new_model", "oracle_F", "oracle_marginal",
    "phi_spectral", "psi_K", "saddle_eta_star", "saddle_g", "scaled_point", "simulate",
    "solve_exact", "solve_xi", "stationary_pk", "transition_F", "y0_curve",
]
