"""Tests for asymcom.abel — closed forms for the normalized Abel equation."""
import cmath

import numpy as np
import pytest

from asymcom.abel import (
    C1_EXACT,
    SING_X,
    SING_X0,
    SING_Y0,
    F0_closed,
    F0_sing,
    F1_sing,
    _exponent,
    abel_ode,
    f1_closed,
    solve_exponential,
    x_sing_closed,
)
from asymcom.errors import MathError

POINTS = [1.2 + 0.3j, 0.8 - 0.5j, 2.0 + 1.0j, 0.6 + 0.9j]


def p0(y):
    return 1 / 9 - 3 * y**3


def numeric_derivative(f, y, h=1e-6):
    return (f(y + h) - f(y - h)) / (2 * h)


# ---------------------------------------------------------------------------
# Closed-form derivatives
# ---------------------------------------------------------------------------

class TestClosedForms:
    @pytest.mark.parametrize("y", POINTS)
    def test_F0_derivative(self, y):
        assert numeric_derivative(F0_closed, y) == pytest.approx(1 / p0(y), rel=1e-6)

    @pytest.mark.parametrize("y", POINTS)
    def test_f1_derivative(self, y):
        expected = (y / (5 * p0(y)) - 0.2) / p0(y)
        assert numeric_derivative(f1_closed, y) == pytest.approx(expected, rel=1e-6)

    @pytest.mark.parametrize("y", POINTS)
    def test_singular_derivatives(self, y):
        assert numeric_derivative(F0_sing, y) == pytest.approx(-1 / p0(y), rel=1e-6)
        assert numeric_derivative(F1_sing, y) == pytest.approx(-y / (5 * p0(y) ** 2), rel=1e-6)

    def test_singular_forms_vanish_at_infinity(self):
        y = 1e4 + 0j
        assert abs(F0_sing(y)) < 1e-6
        assert abs(F1_sing(y)) < 1e-6

    def test_ode_matches_coefficients(self):
        ode = abel_ode()
        y, x = 0.4 - 0.2j, 7 + 3j
        assert ode.Q(y, x) == pytest.approx(p0(y) - y / (5 * x))


# ---------------------------------------------------------------------------
# Singularity formula
# ---------------------------------------------------------------------------

class TestSingularityFormula:
    def test_close_to_known_position(self):
        assert abs(x_sing_closed(SING_X0, SING_Y0) - SING_X) < 1e-6 * abs(SING_X)

    def test_log_sheet_shift(self):
        base = x_sing_closed(SING_X0, SING_Y0)
        shifted = x_sing_closed(SING_X0, SING_Y0, k_log=1)
        assert shifted - base == pytest.approx(2j * cmath.pi * (1 + 1 / (5 * SING_X0)))


# ---------------------------------------------------------------------------
# Exponential inverter
# ---------------------------------------------------------------------------

class TestSolveExponential:
    @pytest.mark.parametrize("x, y", [(1.6 + 110j, 0.8 + 0.3j), (1.55 + 80j, 1.2 + 0.1j)])
    def test_recovers_solution(self, x, y):
        log_x = complex(np.log(x))
        E0, _ = _exponent(y, x, 0j, C1_EXACT, log_x)
        C = E0 - cmath.log(3 * y - 1)
        assert solve_exponential(x, C, y + 0.02) == pytest.approx(y, abs=1e-10)

    def test_no_iterations_diverges(self):
        with pytest.raises(MathError) as exc:
            solve_exponential(1.6 + 110j, 2 - 4j, 1.0, max_iter=0)
        assert exc.value.kind == "NewtonDiverged"
