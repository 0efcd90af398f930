import math

import numpy as np
import pytest
from scipy import integrate

from rhls.errors import EnvelopeMissing, NoConvergence
from rhls.quadrature import (
    Box,
    QuadratureSpec,
    ball_volume,
    integrate_halfline,
    integrate_hemisphere_zonal,
    integrate_interval,
    integrate_line,
    integrate_sphere_zonal,
    monte_carlo_pair_integral,
    power_kernel,
    sphere_area,
)

RULES = ["adaptive-gauss", "fixed-gauss-legendre", "double-exponential-substitution"]


class TestSpec:
    @pytest.mark.parametrize("kw", [{"rel_tol": 0.0}, {"abs_tol": -1.0}, {"max_subdivisions": 0}])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            QuadratureSpec(**kw)

    def test_unit_ball_and_sphere(self):
        assert ball_volume(1) == pytest.approx(2.0)
        assert ball_volume(2) == pytest.approx(math.pi)
        assert ball_volume(3) == pytest.approx(4 * math.pi / 3)
        assert sphere_area(0) == pytest.approx(2.0)
        assert sphere_area(1) == pytest.approx(2 * math.pi)
        assert sphere_area(2) == pytest.approx(4 * math.pi)


class TestLineIntegrals:
    @pytest.mark.parametrize("rule", RULES)
    def test_lorentzian_square(self, rule):
        res = integrate_line(lambda x: (1 + x * x) ** -2, QuadratureSpec(rule=rule))
        assert res.value == pytest.approx(math.pi / 2, rel=1e-9)
        assert res.error_estimate >= 0

    @pytest.mark.parametrize("rule", RULES)
    def test_beta_halfline(self, rule):
        res = integrate_halfline(lambda r: r * (1 + r * r) ** -3, QuadratureSpec(rule=rule))
        assert res.value == pytest.approx(0.25, rel=1e-9)

    def test_divergent_tail(self):
        with pytest.raises(NoConvergence):
            integrate_line(lambda x: x * x / (1 + x * x))

    def test_monte_carlo_rule(self):
        res = integrate_halfline(lambda r: r * (1 + r * r) ** -3, QuadratureSpec(rule="monte-carlo", samples=200_000))
        assert abs(res.value - 0.25) <= 4 * res.error_estimate + 1e-12

    def test_more_subdivisions_never_worse(self):
        f = lambda x: np.abs(np.sin(7 * x)) ** 0.3  # noqa: E731
        errs = []
        for m in (5, 10, 20, 40, 80):
            try:
                errs.append(integrate_interval(f, 0.0, 3.0, QuadratureSpec(max_subdivisions=m)).error_estimate)
            except NoConvergence:
                errs.append(math.inf)
        assert all(b <= a for a, b in zip(errs, errs[1:]))

    def test_algebraic_endpoint_weight(self):
        res = integrate_interval(lambda t: np.ones_like(t), 0.0, 1.0, weight="alg", wvar=(-0.5, 0.0))
        assert res.value == pytest.approx(2.0, rel=1e-12)


class TestZonal:
    def test_constant_on_s2(self):
        assert integrate_sphere_zonal(lambda t: 1.0 + 0 * t, 2).value == pytest.approx(4 * math.pi, rel=1e-12)

    def test_second_moment_on_s2(self):
        assert integrate_sphere_zonal(lambda t: t * t, 2).value == pytest.approx(4 * math.pi / 3, rel=1e-12)

    @pytest.mark.parametrize("c", [0.0, 0.3, 0.9, 1.0])
    def test_linear_term_vanishes_on_the_circle(self, c):
        res = integrate_sphere_zonal(lambda t: 2 - 2 * c * t, 1, normalized=True)
        assert res.value == pytest.approx(2.0, abs=1e-12)

    def test_zero_sphere_is_two_points(self):
        assert integrate_sphere_zonal(lambda t: np.exp(t), 0).value == pytest.approx(math.e + 1 / math.e)

    @pytest.mark.parametrize("k", [2, 3, 4, 5])
    def test_matches_brute_force_monte_carlo(self, k):
        rng = np.random.default_rng(k)
        for _ in range(20 if k == 2 else 3):
            coef = rng.normal(size=4)
            g = lambda t, c=coef: np.exp(c[0] * t) * (2 + np.sin(c[1] * t + c[2])) + c[3] ** 2  # noqa: E731
            z = rng.normal(size=(100_000, k + 1))
            w = z[:, 0] / np.linalg.norm(z, axis=1)
            samp = sphere_area(k) * g(w)
            mc, se = samp.mean(), samp.std(ddof=1) / math.sqrt(samp.size)
            assert abs(integrate_sphere_zonal(g, k).value - mc) <= 3 * se

    def test_hemisphere_examples(self):
        assert integrate_hemisphere_zonal(lambda t: 1.0 + 0 * t, 2).value == pytest.approx(2 * math.pi)
        assert integrate_hemisphere_zonal(lambda t: 0.25 + 0 * t, 2).value == pytest.approx(math.pi / 2)
        assert integrate_hemisphere_zonal(lambda t: t, 2).value == pytest.approx(math.pi)

    @pytest.mark.parametrize("n", [3, 4, 5])
    def test_hemisphere_area(self, n):
        assert integrate_hemisphere_zonal(lambda t: 1.0 + 0 * t, n).value == pytest.approx(sphere_area(n) / 2, rel=1e-10)


def _indicator_interval(x):
    return (np.abs(x[:, 0]) <= 1).astype(float)


def _indicator_half_disk(y):
    return (np.sum(y * y, axis=1) <= 1).astype(float)


class TestMonteCarloPairing:
    box_f = Box((-1.0,), (1.0,))
    box_g = Box((-1.0, 0.0), (1.0, 1.0))

    def test_product_of_measures(self):
        one = lambda x, y: np.ones(x.shape[0])  # noqa: E731
        res = monte_carlo_pair_integral(_indicator_interval, _indicator_half_disk, one, 2, 0, 200_000, self.box_f, self.box_g)
        assert abs(res.value - math.pi) <= 3 * res.error_estimate

    def test_against_nested_quadrature(self):
        def inner(x):
            return integrate.dblquad(
                lambda h, y1: ((x - y1) ** 2 + h * h), -1, 1, 0, lambda y1: math.sqrt(1 - y1 * y1)
            )[0]

        exact = integrate.quad(inner, -1, 1)[0]
        res = monte_carlo_pair_integral(
            _indicator_interval, _indicator_half_disk, power_kernel(2.0), 2, 7, 300_000, self.box_f, self.box_g
        )
        assert abs(res.value - exact) <= 3 * res.error_estimate

    def test_requires_samples_and_supports(self):
        with pytest.raises(EnvelopeMissing):
            monte_carlo_pair_integral(_indicator_interval, _indicator_half_disk, power_kernel(1.0), 2, 0, 0, self.box_f, self.box_g)
        with pytest.raises(EnvelopeMissing):
            monte_carlo_pair_integral(_indicator_interval, _indicator_half_disk, power_kernel(1.0), 2, 0, 100)

    def test_reproducible_for_any_worker_count(self):
        args = (_indicator_interval, _indicator_half_disk, power_kernel(1.0), 2, 42, 100_000, self.box_f, self.box_g)
        a = monte_carlo_pair_integral(*args, workers=1)
        b = monte_carlo_pair_integral(*args, workers=4)
        assert a.value == b.value and a.error_estimate == b.error_estimate
        c = monte_carlo_pair_integral(*args[:4], 43, *args[5:])
        assert c.value != a.value
