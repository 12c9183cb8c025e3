"""Homogeneous nonovershooting stabilization and safety filters for integrator chains."""

from .kernels import BACKEND
from .errors import (
    DiagonalInfeasible,
    DivergenceDetected,
    HomsafeError,
    InvalidInput,
    NotInInterior,
    ScenarioParseError,
)
from .dilation import Dilation, HomNormContext, hom_norm, hom_norm_grad
from .linctl import LinearDesign, build_linear_design, lambda_lower_bound, select_lambda
from .homctl import HomDesign, build_hom_design, u_hom
from .safety import FilterConfig, delta_r, filter_fntsf, filter_fxtsf
from .sim import Nominal, Scenario, integrate, paper_v_scenario

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "HomsafeError",
    "InvalidInput",
    "NotInInterior",
    "DiagonalInfeasible",
    "DivergenceDetected",
    "ScenarioParseError",
    "Dilation",
    "HomNormContext",
    "hom_norm",
    "hom_norm_grad",
    "LinearDesign",
    "build_linear_design",
    "lambda_lower_bound",
    "select_lambda",
    "HomDesign",
    "build_hom_design",
    "u_hom",
    "FilterConfig",
    "delta_r",
    "filter_fntsf",
    "filter_fxtsf",
    "Nominal",
    "Scenario",
    "integrate",
    "paper_v_scenario",
]
