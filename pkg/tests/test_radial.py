import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rhls.errors import NegativeValue, NotMonotone, SignViolation
from rhls.operators import HalfSpaceProfile
from rhls.quadrature import ball_volume
from rhls.radial import (
    RadialProfile,
    claim_radius,
    distribution,
    layercake_bound_check,
    lp_mass,
    lp_mass_direct,
    lp_mass_layercake,
    rearrange,
    reversed_holder_gap,
)


def tent():
    return RadialProfile(np.array([0.0, 1.0]), np.array([1.0, 0.0]), 1, monotone=True)


def random_profile(rng, dim, monotone=False, m=12):
    radii = np.concatenate([[0.0], np.sort(rng.uniform(0.05, 3.0, m - 2)), [3.2]])
    radii = np.unique(radii)
    vals = rng.uniform(0.1, 2.0, radii.size)
    vals[-1] = 0.0
    if monotone:
        vals = np.sort(vals)[::-1]
    return RadialProfile(radii, vals, dim, monotone=monotone)


class TestProfile:
    def test_rejects_negative(self):
        with pytest.raises(NegativeValue):
            RadialProfile(np.array([0.0, 1.0]), np.array([1.0, -1.0]), 1)

    def test_rejects_unsorted(self):
        with pytest.raises(ValueError):
            RadialProfile(np.array([1.0, 0.0]), np.array([1.0, 1.0]), 1)

    def test_monotone_flag_checked(self):
        with pytest.raises(NotMonotone):
            RadialProfile(np.array([0.0, 1.0]), np.array([0.0, 1.0]), 1, monotone=True)

    def test_tail_extrapolation(self):
        f = RadialProfile(np.array([0.0, 1.0, 2.0]), np.array([2.0, 1.0, 0.5]), 1, tail=3.0)
        assert f(np.array([4.0]))[0] == pytest.approx(0.5 / 8)


class TestDistribution:
    def test_tent(self):
        assert distribution(tent(), 0.25).measure == pytest.approx(1.5)

    def test_above_max(self):
        assert distribution(tent(), 2.0).measure == 0.0

    def test_unit_disk(self):
        assert distribution(RadialProfile.indicator(1.0, 2), 0.5).measure == pytest.approx(math.pi)

    def test_needs_monotone(self):
        f = RadialProfile(np.array([0.0, 1.0, 2.0]), np.array([0.0, 1.0, 0.0]), 1)
        with pytest.raises(NotMonotone):
            distribution(f, 0.5)

    @pytest.mark.parametrize("dim", [1, 2, 3])
    def test_exact_function(self, dim):
        f = RadialProfile.from_function(lambda r: np.exp(-r * r), dim, tail=50.0, monotone=True)
        level = 0.3
        radius = math.sqrt(-math.log(level))
        assert distribution(f, level).measure == pytest.approx(ball_volume(dim) * radius**dim, rel=1e-9)


class TestRearrange:
    def test_monotone_unchanged(self):
        f = tent()
        g = rearrange(f)
        r = np.linspace(0, 1.5, 31)
        np.testing.assert_allclose(g(r), f(r), atol=1e-12)
        assert g.monotone

    def test_two_steps(self):
        f = RadialProfile(np.array([0.0, 2.0, 3.0, 5.0, 6.0]), np.array([0.0, 3.0, 0.0, 1.0, 0.0]), 1, interp="step")
        g = rearrange(f)
        np.testing.assert_allclose(g(np.array([0.0, 0.5, 0.99, 1.01, 1.5, 1.99, 2.01, 4.0])), [3, 3, 3, 1, 1, 1, 0, 0])

    def test_negative_samples(self):
        with pytest.raises(NegativeValue):
            rearrange(np.array([1.0, -1.0]), dim=1, cell_measure=1.0)

    def test_sample_input(self):
        # values 1, 3, 2 on unit cells of R^1: sorted levels over measures 1, 1, 1
        g = rearrange(np.array([1.0, 3.0, 2.0]), dim=1, cell_measure=1.0)
        np.testing.assert_allclose(g(np.array([0.25, 0.75, 1.25])), [3.0, 2.0, 1.0])

    @pytest.mark.parametrize("dim", [1, 2, 3])
    def test_equimeasurable_and_mass_preserving(self, dim):
        rng = np.random.default_rng(dim)
        for _ in range(5):
            f = random_profile(rng, dim)
            g = rearrange(f)
            assert g.monotone
            for level in np.unique(f.values[f.values > 0])[:-1] * 0.999:
                from rhls.radial import _linear_level_measure

                want = float(_linear_level_measure(f, np.array([level]))[0])
                assert distribution(g, level).measure == pytest.approx(want, rel=1e-9)
            assert lp_mass(g, 0.5) == pytest.approx(lp_mass(f, 0.5), rel=1e-6)


class TestMass:
    def test_indicator(self):
        assert lp_mass(RadialProfile.indicator(1.0, 1), 0.5) == pytest.approx(2.0)

    def test_lorentzian(self):
        f = RadialProfile.from_function(lambda r: (1 + r * r) ** -2, 1, tail=4.0, monotone=True)
        assert lp_mass(f, 0.5) == pytest.approx(math.pi, rel=1e-9)

    def test_layercake_agrees_with_direct(self):
        rng = np.random.default_rng(5)
        for i in range(20):
            f = random_profile(rng, 1 + i % 3, monotone=True)
            p = rng.uniform(0.2, 0.95)
            assert lp_mass_layercake(f, p) == pytest.approx(lp_mass_direct(f, p), rel=1e-8)

    def test_cross_check_flag(self):
        f = RadialProfile.from_function(lambda r: (1 + r * r) ** -2, 2, tail=4.0, monotone=True)
        assert lp_mass(f, 0.75, cross_check=True) == pytest.approx(lp_mass(f, 0.75), rel=1e-8)


class TestLayerCakeBound:
    f = RadialProfile.indicator(1.0, 1)
    g = HalfSpaceProfile.half_ball(2)

    def test_no_exclusion(self):
        res = layercake_bound_check(self.f, self.g, 0.5, 0.5, 0.0, seed=0, samples=400_000)
        assert res.I_abc == pytest.approx(math.pi, rel=1e-2)
        assert res.bound == pytest.approx(math.pi / 2, rel=1e-2)
        assert res.ok

    def test_claim_radius(self):
        res = layercake_bound_check(self.f, self.g, 0.5, 0.5, 0.7071, seed=1)
        assert res.c_max == pytest.approx(math.sqrt(0.5), rel=1e-2)
        assert res.ok

    def test_far_exclusion_empties(self):
        res = layercake_bound_check(self.f, self.g, 0.5, 0.5, 10.0, seed=2, samples=10_000)
        assert res.I_abc == 0.0

    def test_claim_radius_formula(self):
        assert claim_radius(2.0, math.pi / 2, 2) == pytest.approx(max(2 / 4, math.sqrt(0.5)))


class TestReversedHolder:
    def test_equality(self):
        one = lambda x: np.ones_like(np.asarray(x, float))  # noqa: E731
        assert reversed_holder_gap(one, one, 0.5, (0.0, 1.0)) == pytest.approx(0.0, abs=1e-13)

    def test_linear(self):
        one = lambda x: np.ones_like(np.asarray(x, float))  # noqa: E731
        assert reversed_holder_gap(lambda x: x, one, 0.5, (0.0, 1.0)) == pytest.approx(1 / 18, abs=1e-12)

    def test_sign_violation(self):
        with pytest.raises(SignViolation):
            reversed_holder_gap(lambda x: x, lambda x: x - 0.5, 0.5, (0.0, 1.0))

    @settings(max_examples=50, deadline=None)
    @given(
        st.lists(st.floats(0.0, 3.0), min_size=1, max_size=4),
        st.lists(st.floats(0.05, 3.0), min_size=1, max_size=4),
        st.floats(0.05, 0.95),
    )
    def test_gap_nonnegative(self, a, b, p):
        phi = lambda x: np.polyval(a, x)  # noqa: E731
        psi = lambda x: np.polyval(b, x)  # noqa: E731
        assert reversed_holder_gap(phi, psi, p, (0.0, 1.0)) >= -1e-10
