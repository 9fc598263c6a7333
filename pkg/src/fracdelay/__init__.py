"""Spectral method-of-steps solver for time-fractional delay PDEs on (0, pi)^N."""

from __future__ import annotations

__version__ = "0.1.0"

from .basis import AxisKind, AxisSpec, ModeIndex, eigen_data, mode_box, riesz_criterion
from .errors import FracDelayError, ParseError, ValidationError
from .fracops import FracOrder, Monomial, PowerSum, SampledFn, rl_derivative, rl_integral
from .projection import CoeffSet, GridFn, project, reconstruct
from .specfun import MLParams, gamma, mittag_leffler, prabhakar2, rgamma
from .stepper import ModeCauchyData, ModeTrajectory, Multiplier, solve_mode

__all__ = [
    "__version__",
    "AxisKind",
    "AxisSpec",
    "ModeIndex",
    "eigen_data",
    "mode_box",
    "riesz_criterion",
    "FracDelayError",
    "ParseError",
    "ValidationError",
    "FracOrder",
    "Monomial",
    "PowerSum",
    "SampledFn",
    "rl_derivative",
    "rl_integral",
    "CoeffSet",
    "GridFn",
    "project",
    "reconstruct",
    "MLParams",
    "gamma",
    "mittag_leffler",
    "prabhakar2",
    "rgamma",
    "ModeCauchyData",
    "ModeTrajectory",
    "Multiplier",
    "solve_mode",
]
