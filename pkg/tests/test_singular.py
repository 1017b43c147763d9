"""Tests for asymcom.singular — constants at infinity, singularity location and RK verification."""
import cmath
import math

import pytest

from asymcom.abel import SING_X, SING_X0, SING_Y0, abel_ode, x_sing_closed
from asymcom.errors import MathError, VerificationError
from asymcom.model import OdeSpec, SingularityReport
from asymcom.singular import (
    build_singular,
    decay_exponent,
    local_estimate,
    locate_singularity,
    singularity_array,
    candidate_routes,
    verify_all,
    verify_singularity,
)
from asymcom.ui.console import Console, set_console

set_console(Console())


def tan_ode():
    return OdeSpec.from_coeffs([[1, 0, 1]], 1)


@pytest.fixture(scope="module")
def tan_sing():
    return build_singular(tan_ode())


@pytest.fixture(scope="module")
def abel_sing():
    return build_singular(abel_ode(2))


# ---------------------------------------------------------------------------
# Building
# ---------------------------------------------------------------------------

class TestBuildSingular:
    def test_linear_rejected(self):
        with pytest.raises(MathError) as exc:
            build_singular(OdeSpec.from_coeffs([[0, -1]], 1))
        assert exc.value.kind == "DegreeTooLow"

    def test_decay_metadata(self, abel_sing, tan_sing):
        assert abel_sing.q == 2
        assert abel_sing.decay[:2] == (-2, -4)
        assert tan_sing.decay[0] == -1

    def test_fitted_decay_exponents(self, abel_sing, tan_sing):
        # -(m0 - 1) for F_0, -(m0 + q - 1) for F_k
        assert decay_exponent(abel_sing, 0) == pytest.approx(-2, abs=0.2)
        assert decay_exponent(abel_sing, 1) == pytest.approx(-4, abs=0.2)
        assert decay_exponent(tan_sing, 0) == pytest.approx(-1, abs=0.2)


# ---------------------------------------------------------------------------
# Location
# ---------------------------------------------------------------------------

class TestLocate:
    @pytest.mark.parametrize("y0", [0.0, 0.5, 2.0, -1.5, 0.3 + 0.4j])
    def test_tan_closed_form(self, tan_sing, y0):
        r = locate_singularity(tan_sing, 1.0, y0)
        expected = 1.0 + math.pi / 2 - cmath.atan(y0)
        assert abs(r.x_sing - expected) < 1e-8
        assert r.status == "predicted"

    def test_abel_known_position(self, abel_sing):
        r = locate_singularity(abel_sing, SING_X0, SING_Y0)
        assert abs(r.x_sing - SING_X) < 1e-6 * abs(SING_X)
        assert r.order_used == 2

    def test_abel_two_terms_match_closed_formula(self):
        sing = build_singular(abel_ode(1))
        r = locate_singularity(sing, SING_X0, SING_Y0)
        assert abs(r.x_sing - x_sing_closed(SING_X0, SING_Y0)) < 1e-7

    def test_too_close_to_root(self, abel_sing):
        with pytest.raises(MathError) as exc:
            locate_singularity(abel_sing, SING_X0, 1 / 3 + 1e-3)
        assert exc.value.kind == "PathThroughRoot"


class TestArray:
    def test_tan_shifts_are_multiples_of_pi(self, tan_sing):
        reports = singularity_array(tan_sing, 1.0, 0.0, [(0, 0), (0, 1), (1, 0)])
        xs = [r.x_sing for r in reports]
        assert xs[0] == pytest.approx(1 + math.pi / 2, abs=1e-8)
        assert xs[1] == pytest.approx(1 + 3 * math.pi / 2, abs=1e-8)
        assert xs[2] == pytest.approx(1 - math.pi / 2, abs=1e-8)
        assert reports[1].branch_shift == (0, 1)

    def test_abel_period_shift(self, abel_sing):
        base, shifted = singularity_array(abel_sing, SING_X0, SING_Y0, [(0, 0, 0), (1, 0, 0)])
        expected = 2j * math.pi * (1 + 1 / (5 * SING_X0))
        assert abs((shifted.x_sing - base.x_sing) - expected) < 20 * abs(SING_X0) ** -2


# ---------------------------------------------------------------------------
# Verification
# ---------------------------------------------------------------------------

class TestVerify:
    def test_local_estimate_on_tan(self):
        x = 1 + math.pi / 2 - 0.01
        est = local_estimate(tan_ode(), x, math.tan(x - 1))
        assert est == pytest.approx(1 + math.pi / 2, abs=1e-5)

    def test_tan_confirmed(self, tan_sing):
        r = verify_singularity(tan_ode(), locate_singularity(tan_sing, 1.0, 0.0))
        assert r.status == "confirmed"
        assert r.verified
        assert r.digits >= 7

    def test_shifted_tan_with_detour(self, tan_sing):
        report = singularity_array(tan_sing, 1.0, 0.0, [(0, 1)])[0]
        r = verify_singularity(tan_ode(), report, detour=1j)
        assert r.status == "confirmed"

    def test_wrong_prediction_is_not_confirmed(self, tan_sing):
        good = locate_singularity(tan_sing, 1.0, 0.0)
        bad = SingularityReport(good.x_sing + 0.5, good.branch_shift, 1, 1.0, 0.0)
        try:
            r = verify_singularity(tan_ode(), bad)
        except VerificationError as e:
            assert e.kind == "NoBlowup"
        else:
            assert r.status == "mismatch"
            assert not r.verified

    def test_abel_known_case(self, abel_sing):
        r = verify_singularity(abel_ode(2), locate_singularity(abel_sing, SING_X0, SING_Y0))
        assert r.status == "confirmed"
        assert r.digits >= 6
        assert abs(r.x_found - SING_X) < 1e-6 * abs(SING_X)
        assert r.note == "straight"
        n1 = locate_singularity(build_singular(abel_ode(1)), SING_X0, SING_Y0).x_sing
        assert abs(r.x_sing - r.x_found) < abs(n1 - r.x_found)

    def test_verify_all_keeps_order(self, tan_sing):
        good = locate_singularity(tan_sing, 1.0, 0.0)
        bad = SingularityReport(good.x_sing + 0.5, good.branch_shift, 1, 1.0, 0.0)
        out = verify_all(tan_ode(), [good, bad, good], max_workers=2)
        assert [r.status for r in out][0] == "confirmed"
        assert out[1].status in ("mismatch", "failed")
        assert out[2].status == "confirmed"


# ---------------------------------------------------------------------------
# Routes around other singularities
# ---------------------------------------------------------------------------

ABEL_SHIFTS = [(0, 0, 0), (1, 0, 0), (2, 0, 0), (3, 0, 0), (0, 1, 0), (0, 0, 1)]


@pytest.fixture(scope="module")
def abel_array(abel_sing):
    reports = singularity_array(abel_sing, SING_X0, SING_Y0, ABEL_SHIFTS)
    return verify_all(abel_ode(2), reports, max_workers=4)


class TestRoutes:
    def test_straight_comes_first(self):
        report = SingularityReport(5 + 20j, (1,), 2, 5 + 0j, 0.1)
        routes = candidate_routes(report, avoid=[5 + 12j, 5 + 28j])
        labels = [label for label, _ in routes]
        assert labels[0] == "straight"
        assert routes[0][1] is None
        assert sum(label.startswith("side") for label in labels) == 4
        # offsets are perpendicular to x0 -> x_sing and at most half the spacing
        for _, path in routes[1:]:
            off = path.nodes[1] - 5
            assert abs(off.imag) < 1e-12
            assert abs(off) <= 4 + 1e-12

    def test_nearby_prediction_gets_a_loop(self):
        report = SingularityReport(15 + 57j, (0, 0, 1), 2, 10 + 60j, 0.7 + 0.3j)
        near = 9.8 + 60.2j
        routes = candidate_routes(report, avoid=[near, 10 + 80j])
        loops = [(label, path) for label, path in routes if label.startswith("loop")]
        assert len(loops) == 2
        for _, path in loops:
            arc = path.pieces[-1]
            assert arc.center == near
            assert abs(arc.sweep) == pytest.approx(2 * math.pi)
            assert path.start == 10 + 60j
            assert abs(path.end - near) == pytest.approx(2 * abs(10 + 60j - near))

    def test_explicit_detour_is_the_only_route(self):
        report = SingularityReport(2 + 0j, (0,), 1, 0j, 0.0)
        routes = candidate_routes(report, avoid=[4 + 0j], detour=1j)
        assert [label for label, _ in routes] == ["detour"]
        assert routes[0][1].end == pytest.approx(1 + 1j)

    @pytest.mark.timeout(900)
    @pytest.mark.parametrize("i", range(len(ABEL_SHIFTS)))
    def test_abel_shifts_confirmed(self, abel_array, i):
        r = abel_array[i]
        assert r.branch_shift == ABEL_SHIFTS[i]
        assert r.status == "confirmed", (r.note, r.x_found, r.digits)
        assert r.digits >= 4

    @pytest.mark.timeout(900)
    def test_period_shift_needs_side_route(self, abel_array):
        assert abel_array[3].note.startswith("side +")

    @pytest.mark.timeout(900)
    def test_third_root_shift_loops_around_principal(self, abel_array):
        assert abel_array[5].note.startswith("loop")
        assert abel_array[5].x_found == pytest.approx(15.2338996 + 57.0900487j, abs=1e-5)
