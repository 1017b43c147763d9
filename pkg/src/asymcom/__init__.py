from .algebra import Contour, Path, poly_roots
from .comotion import build_constant, conserved_along, eval_C, residual, solve_a, solve_c
from .errors import AsymError, ConfigError, MathError, VerificationError
from .inversion import constant_from_ic, continue_trajectory, newton_invert
from .model import OdeSpec
from .oracle import detect_region, rk_integrate
from .singular import build_singular, locate_singularity, singularity_array, verify_singularity

__all__ = [
    "Contour", "Path", "poly_roots",
    "build_constant", "conserved_along", "eval_C", "residual", "solve_a", "solve_c",
    "constant_from_ic", "continue_trajectory", "newton_invert",
    "build_singular", "locate_singularity", "singularity_array", "verify_singularity",
    "detect_region", "rk_integrate",
    "OdeSpec",
    "AsymError", "ConfigError", "MathError", "VerificationError",
]
