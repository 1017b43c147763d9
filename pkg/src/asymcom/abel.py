# abel.py
"""
The normalized Abel equation

    y' = 1/9 - 3 y^3 - y / (5x)

with closed-form F_0, F_1 in both domains, the closed singularity formula
and the exponential-form inverter. Everything here is specific to this
equation; the generic machinery lives in comotion/inversion/singular.
"""
from __future__ import annotations

import math
from typing import Optional

import numpy as np

from .algebra import Contour
from .comotion import build_constant
from .errors import MathError
from .model import ConstantSeries, OdeSpec

SQRT3 = math.sqrt(3.0)

# P_0 = 1/9 - 3y^3, P_1 = -y/5 (ascending coefficients)
ABEL_COEFFS = ((1.0 / 9.0, 0.0, 0.0, -3.0), (0.0, -0.2))

A_EXPECTED = 0.2
C1_RATIONAL = 1.0 / 25.0
C1_EXACT = 1.0 / 25.0 + 2.0 * SQRT3 * math.pi / 15.0

# Trajectory of the inversion demo: y(1+5i) = 1.1 and its constant, quoted
# to three digits (C_2 on the trajectory is 2.18285-4.65805i).
DEMO_PATH = (1 + 5j, 1.5 + 50j, 1.6 + 120j)
DEMO_Y0 = 1.1
DEMO_K = 2.18 - 4.65j
DEMO_X_MIN = 61.4

# Path visiting all three roots, y(50i) = 0.6.
TOUR_PATH = (50j, 50, -50j, -50, 50j, 50, -50j, -50 * (SQRT3 + 1j))
TOUR_Y0 = 0.6

SING_X0 = 10 + 60j
SING_Y0 = 0.7 + 0.3j
SING_X = 9.8062761 + 60.2166617j


def abel_ode(n: int = 2) -> OdeSpec:
    return OdeSpec.from_coeffs(ABEL_COEFFS, n)


def A(y):
    return np.arctan((6.0 * y + 1.0) / SQRT3)


def L(y):
    return np.log(9.0 * y * y + 3.0 * y + 1.0)


def _P0(y):
    return 1.0 / 9.0 - 3.0 * y**3


# ---------------------------------------------------------------------------
# Closed forms
# ---------------------------------------------------------------------------

def F0_closed(y):
    """∫ dy / P_0 on principal branches."""
    return SQRT3 * A(y) - np.log(3.0 * y - 1.0) + 0.5 * L(y)


def f1_closed(y):
    """Antiderivative of F_1' with a = 1/5, without the constant c_1."""
    return 6.0 * y * y / (10.0 * _P0(y)) - (2.0 * SQRT3 / 5.0) * A(y)


def F0_sing(y):
    """-∫_∞^y ds / P_0, vanishing at +∞."""
    return -SQRT3 * A(y) + np.log(3.0 * y - 1.0) - 0.5 * L(y) + SQRT3 * math.pi / 2.0


def F1_sing(y):
    return ((-54.0 * y * y / (1.0 - 27.0 * y**3) + 2.0 * SQRT3 * A(y)
             + 2.0 * np.log(3.0 * y - 1.0) - L(y)) / 10.0 - SQRT3 * math.pi / 10.0)


def closed_anchors(base_y: complex, n: int = 2) -> tuple[complex, ...]:
    """Anchors that make the continued F_0, F_1 coincide with the closed forms (F_1 up to c_1)."""
    vals = (complex(F0_closed(complex(base_y))), complex(f1_closed(complex(base_y))))
    return vals[:n + 1]


def abel_constant(n: int = 2, base_y: complex = DEMO_Y0, close_top: bool = False) -> ConstantSeries:
    """R-domain constant for the loop around 1/3, pinned to the closed forms."""
    return build_constant(abel_ode(n), Contour((1, 0, 0)), base_y, n,
                          anchors=closed_anchors(base_y, n), close_top=close_top)


def x_sing_closed(x0: complex, y0: complex, k_log: int = 0, k_atan: int = 0) -> complex:
    """
    x0 + F_0(y0) + F_1(y0)/x0 in the singular domain; k_log and k_atan move
    log(3y-1) and arctan to other sheets.
    """
    x0, y0 = complex(x0), complex(y0)
    a_ = A(y0) + math.pi * k_atan
    lg = np.log(3.0 * y0 - 1.0) + 2j * math.pi * k_log
    l_ = L(y0)
    f0 = -SQRT3 * a_ + lg - 0.5 * l_ + SQRT3 * math.pi / 2.0
    f1 = (-54.0 * y0 * y0 / (1.0 - 27.0 * y0**3) + 2.0 * SQRT3 * a_ + 2.0 * lg - l_) / 10.0 - SQRT3 * math.pi / 10.0
    return complex(x0 + f0 + f1 / x0)


# ---------------------------------------------------------------------------
# Exponential form
# ---------------------------------------------------------------------------

def _exponent(y: complex, x: complex, C: complex, c1: complex, log_x: complex) -> tuple[complex, complex]:
    w = (6.0 * y + 1.0) / SQRT3
    q = 1.0 - 27.0 * y**3
    coef = SQRT3 - 2.0 * SQRT3 / (5.0 * x)
    E = (-C - x + 0.2 * log_x + coef * np.arctan(w) + 0.5 * L(y)
         + (27.0 * y * y / (5.0 * q) + c1) / x)
    dE = (coef * (6.0 / SQRT3) / (1.0 + w * w)
          + 0.5 * (18.0 * y + 3.0) / (9.0 * y * y + 3.0 * y + 1.0)
          + 27.0 / (5.0 * x) * (2.0 * y + 27.0 * y**4) / q**2)
    return complex(E), complex(dE)


def solve_exponential(x: complex, C: complex, y_guess: complex, c1: complex = C1_EXACT,
                      log_x: Optional[complex] = None, tol: float = 1e-12, max_iter: int = 50) -> complex:
    """
    Solve y = 1/3 + exp(E(y; x, C)) / 3, the two-term constant rewritten with
    log(3y-1) isolated, by damped Newton.
    """
    x = complex(x)
    log_x = complex(np.log(x)) if log_x is None else complex(log_x)
    y = complex(y_guess)

    def H(v: complex) -> tuple[complex, complex]:
        E, dE = _exponent(v, x, C, c1, log_x)
        e = np.exp(E) / 3.0
        return v - 1.0 / 3.0 - e, 1.0 - e * dE

    h, dh = H(y)
    for _ in range(max_iter):
        if abs(h) <= tol:
            return y
        step = -h / dh
        lam = 1.0
        for _halving in range(9):
            h_new, dh_new = H(y + lam * step)
            if abs(h_new) < abs(h):
                break
            lam *= 0.5
        else:
            break
        y, h, dh = y + lam * step, h_new, dh_new
    raise MathError("NewtonDiverged", "exponential-form iteration did not converge",
                    {"x": x, "C": C, "y": y, "residual": abs(h)})
