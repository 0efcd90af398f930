import math

import numpy as np
import pytest

from rhls.errors import RootBracketFailure
from rhls.geometry import ms_reflect
from rhls.system import (
    amplitude_fixed_point,
    amplitude_scaling_exponent,
    classified_pair,
    critical_radius_of,
    first_equation_rhs,
    fixed_point_solution,
    growth_and_identity_checks,
    moving_sphere_invariance,
    system_residual,
)

A22 = (math.pi**2 / 2) ** 0.2


@pytest.fixture(scope="module")
def sol22():
    return classified_pair(2, 2.0, A22, 1.0)


class TestClassifiedPair:
    def test_formula(self):
        s = classified_pair(2, 2.0, 1.0, 1.0)
        np.testing.assert_allclose(s.u(np.array([[0.0], [1.0], [3.0]])), [1.0, 2.0, 10.0])
        assert (s.kappa, s.theta) == (3.0, 2.0)

    def test_leading_coefficient(self):
        s = classified_pair(3, 1.5, 2.5, 0.7)
        x = np.array([[1e6, 0.0]])
        assert s.u(x)[0] / 1e6**1.5 == pytest.approx(2.5, rel=1e-9)

    def test_translation(self):
        a = classified_pair(3, 2.0, 1.3, 0.9)
        b = classified_pair(3, 2.0, 1.3, 0.9, center=np.array([1.0, -2.0]))
        x = np.random.default_rng(0).normal(size=(20, 2))
        np.testing.assert_allclose(b.u(x + np.array([1.0, -2.0])), a.u(x))

    def test_invalid(self):
        with pytest.raises(ValueError):
            classified_pair(2, 2.0, -1.0, 1.0)
        with pytest.raises(ValueError):
            classified_pair(2, 2.0, 1.0, 1.0, center=np.zeros(2))

    def test_induced_v_closed_form(self):
        # at n = 2, lam = 2 the extension of a^-2 (1 + x^2)^-2 is (pi/2) a^-2 (1 + rho^2 + h^2)
        s = classified_pair(2, 2.0, 1.7, 1.0)
        rho = np.array([0.0, 1.0, 3.0])
        h = np.array([0.0, 0.5, 2.0])
        np.testing.assert_allclose(s.v_radial(rho, h), math.pi / 2 / 1.7**2 * (1 + rho**2 + h**2), rtol=1e-11)

    def test_first_equation_closed_form(self):
        # int |x - y|^2 v^-3 dy with v = (pi/2)(1 + |y|^2) equals (8/pi^3)(pi/4)(1 + x^2)
        s = classified_pair(2, 2.0, 1.0, 1.0)
        r = np.array([0.0, 2.0])
        np.testing.assert_allclose(first_equation_rhs(s, r), 2 / math.pi**2 * (1 + r * r), rtol=1e-10)


class TestAmplitude:
    def test_closed_form(self):
        assert amplitude_fixed_point(2, 2.0) == pytest.approx(A22, rel=1e-10)

    def test_scaling_exponent_n2(self):
        assert amplitude_scaling_exponent(2, 2.0) == pytest.approx(-1.0)

    @pytest.mark.slow
    @pytest.mark.parametrize("b", [0.5, 2.0])
    def test_scale_covariance(self, b):
        mu = amplitude_scaling_exponent(2, 2.0)
        assert amplitude_fixed_point(2, 2.0, b) == pytest.approx(A22 * b**mu, rel=1e-9)

    def test_bracket_failure(self):
        with pytest.raises(RootBracketFailure):
            amplitude_fixed_point(2, 2.0, bracket=(2.0, 3.0))


class TestResiduals:
    @pytest.mark.slow
    def test_fixed_point_solves_both_equations(self, sol22):
        res = system_residual(sol22, sample_radii=(0.0, 1.0, 10.0))
        assert res.res_u <= 1e-6
        assert res.res_v <= 1e-6

    @pytest.mark.slow
    def test_trace_ratio_is_constant(self, sol22):
        # with unit constants in both equations, v(x, 0) / u(x) = (pi/2) / a^3 for every x
        res = system_residual(sol22, sample_radii=(0.0, 1.0, 10.0), heights=())
        np.testing.assert_allclose(res.trace_ratio, math.pi / 2 / A22**3, rtol=1e-10)
        assert not res.ok()

    @pytest.mark.slow
    def test_wrong_amplitude(self, sol22):
        res = system_residual(sol22.with_amplitude(1.1 * A22), sample_radii=(0.0, 1.0), heights=())
        assert res.res_u > 1e-3

    @pytest.mark.slow
    def test_n3(self):
        s = fixed_point_solution(3, 2.0)
        res = system_residual(s, sample_radii=(0.0, 1.0, 10.0), heights=(0.0,))
        assert res.res_u <= 1e-5 and res.res_v <= 1e-5


class TestGrowth:
    @pytest.mark.slow
    def test_limits_and_identity(self, sol22):
        g = growth_and_identity_checks(sol22)
        assert g.growth_u_error <= 1e-3
        assert g.growth_v_error <= 1e-3
        assert g.identity_error <= 1e-6
        assert g.mass_u == pytest.approx(math.pi / A22, rel=1e-9)
        assert g.limit_u == pytest.approx(A22, rel=1e-9)
        assert g.sandwich_ok

    @pytest.mark.slow
    @pytest.mark.parametrize("n, b", [(2, 0.5), (2, 2.0), (3, 0.5), (3, 1.0), (3, 2.0)])
    def test_identity_other_cases(self, n, b):
        g = growth_and_identity_checks(fixed_point_solution(n, 2.0, b))
        assert g.identity_error <= 1e-6


class TestMovingSpheres:
    def test_origin(self, sol22):
        assert critical_radius_of(sol22, np.zeros(1)) == pytest.approx(1.0)
        assert moving_sphere_invariance(sol22, np.zeros(1)) <= 1e-12

    def test_offset(self, sol22):
        assert critical_radius_of(sol22, np.array([3.0])) == pytest.approx(math.sqrt(10))
        assert moving_sphere_invariance(sol22, np.array([3.0])) <= 1e-10

    def test_wrong_radius(self, sol22):
        assert moving_sphere_invariance(sol22, np.array([3.0]), nu=1.5 * math.sqrt(10)) > 0.1

    def test_calibration(self):
        s = classified_pair(3, 1.5, 1.0, 0.8, center=np.array([0.5, 0.5]))
        rng = np.random.default_rng(1)
        for x in rng.normal(size=(10, 2)):
            assert critical_radius_of(s, x) ** 2 - np.sum((x - s.center) ** 2) == pytest.approx(0.64)

    @pytest.mark.parametrize("n, lam", [(2, 2.0), (3, 1.0), (4, 2.5)])
    def test_invariance_random_points(self, n, lam):
        s = classified_pair(n, lam, 1.3, 0.7, center=np.full(n - 1, 0.2))
        rng = np.random.default_rng(n)
        for x in rng.uniform(-3, 3, (5, n - 1)):
            assert moving_sphere_invariance(s, x) <= 1e-10

    def test_reflection_yields_another_fixed_point_solution(self, sol22):
        # any inversion maps u to a(b')(b'^2 + |x - c'|^2)^(lam/2) with the fixed-point amplitude for b'
        mu = amplitude_scaling_exponent(2, 2.0)
        rng = np.random.default_rng(2)
        for _ in range(5):
            x, nu = rng.uniform(-2, 2, 1), rng.uniform(0.3, 3.0)
            xi = np.linspace(-5, 5, 41)[:, None] + x + 0.01
            w = ms_reflect(sol22.u, x, nu, 2.0)(xi)
            c2, c1, c0 = np.polyfit(xi[:, 0], w, 2)
            centre = -c1 / (2 * c2)
            b2 = c0 / c2 - centre**2
            assert c2 == pytest.approx(A22 * math.sqrt(b2) ** mu, rel=1e-9)
