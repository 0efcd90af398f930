from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rhls.constants import c_explicit_lambda2, c_spherical
from rhls.errors import OutOfRange, Stalled
from rhls.exponents import diagonal
from rhls.operators import functional_quotient
from rhls.radial import lp_mass, rearrange
from rhls.varmin import (
    MinimizeOptions,
    discretize,
    extremal_reference,
    fit_extremal_shape,
    gradient_check,
    induced_partner,
    minimize_profile,
    pav_nonincreasing,
    stationarity,
)

C22 = c_explicit_lambda2(2)
E22 = diagonal(2, 2.0)


@pytest.fixture(scope="module")
def disc22():
    return discretize(E22)


@pytest.fixture(scope="module")
def random_run(disc22):
    return minimize_profile(E22, MinimizeOptions(init="random", seed=7), discretization=disc22)


class TestOptions:
    @pytest.mark.parametrize("kw", [{"grid_size": 8}, {"tol": 0.0}, {"r_min": 2.0, "r_max": 1.0}, {"init": "zero"}])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            MinimizeOptions(**kw)


class TestPav:
    def test_already_monotone(self):
        y = np.array([5.0, 3.0, 3.0, 1.0])
        np.testing.assert_array_equal(pav_nonincreasing(y), y)

    def test_pools_violators(self):
        np.testing.assert_allclose(pav_nonincreasing(np.array([1.0, 3.0, 2.0])), [2.0, 2.0, 2.0])

    def test_weights(self):
        np.testing.assert_allclose(pav_nonincreasing(np.array([1.0, 3.0]), np.array([3.0, 1.0])), [1.5, 1.5])

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-10, 10), min_size=1, max_size=30))
    def test_projection_properties(self, ys):
        y = np.array(ys)
        z = pav_nonincreasing(y)
        assert np.all(np.diff(z) <= 1e-12)
        assert z.sum() == pytest.approx(y.sum(), abs=1e-9)
        # projection is idempotent
        np.testing.assert_allclose(pav_nonincreasing(z), z)


class TestDiscretization:
    def test_gradient_matches_differences(self, disc22):
        fv = extremal_reference(2, 2.0)(disc22.grid)
        assert gradient_check(disc22, fv, indices=[0, 10, 50, 100, 127]) <= 1e-4

    def test_extremal_objective(self, disc22):
        fv = extremal_reference(2, 2.0)(disc22.grid)
        assert disc22.objective(fv) == pytest.approx(C22, rel=1e-4)

    def test_objective_is_scale_invariant(self, disc22):
        fv = extremal_reference(2, 2.0)(disc22.grid)
        assert disc22.objective(3.0 * fv) == pytest.approx(disc22.objective(fv), rel=1e-12)


class TestExtremalReference:
    def test_normalized(self):
        f = extremal_reference(2, 2.0)
        assert lp_mass(f, E22.p) == pytest.approx(1.0, abs=1e-10)
        r = np.array([0.0, 1.0, 5.0])
        np.testing.assert_allclose(f(r) / f(0.0), (1 + r * r) ** -2)

    @pytest.mark.slow
    def test_quotient_equals_explicit_constant(self):
        f = extremal_reference(2, 2.0)
        assert functional_quotient(f, induced_partner(f, E22), E22).quotient == pytest.approx(C22, abs=1e-4)

    def test_small_lambda_shape(self):
        f = extremal_reference(3, 1e-6)
        r = np.array([0.0, 0.5, 2.0])
        np.testing.assert_allclose(f(r) / f(0.0), (1 + r * r) ** -2, rtol=1e-5)


class TestMinimize:
    def test_extremal_seed_is_stationary(self, disc22):
        res = minimize_profile(E22, MinimizeOptions(), discretization=disc22)
        assert res.trace.iterations <= 1
        assert res.constant == pytest.approx(C22, rel=1e-3)
        assert stationarity(disc22, extremal_reference(2, 2.0)(disc22.grid)) <= 2e-3

    def test_random_seed_converges(self, random_run):
        assert random_run.constant == pytest.approx(C22, rel=1e-2)
        _, _, dev = fit_extremal_shape(random_run.profile, 2, 2.0)
        assert dev <= 0.02
        assert random_run.stationarity <= 1e-3

    def test_flat_init(self, disc22):
        res = minimize_profile(E22, MinimizeOptions(init="flat"), discretization=disc22)
        assert res.constant == pytest.approx(C22, rel=1e-2)

    def test_unit_mass_and_monotone(self, random_run):
        prof = random_run.profile
        assert prof.monotone
        assert np.all(np.diff(prof.values) <= 0)
        assert lp_mass(prof, E22.p) == pytest.approx(1.0, abs=1e-10)

    def test_descent(self, random_run):
        assert random_run.trace.is_monotone()
        assert np.all(np.diff(random_run.trace.objective) <= 0)

    def test_lower_envelope(self, random_run):
        assert random_run.trace.objective.min() >= c_spherical(2, 2.0).c_spherical - 1e-4

    def test_rearrangement_does_not_increase(self, random_run):
        prof = random_run.profile
        q = rearrange(prof)
        r = np.geomspace(1e-3, 1e3, 50)
        np.testing.assert_allclose(q(r), prof(r), rtol=1e-8)

    def test_unpacks(self, random_run):
        profile, constant, trace = random_run
        assert constant == random_run.constant and trace is random_run.trace

    @pytest.mark.parametrize("n, lam", [(3, 2.0), (2, 1.0)])
    def test_agrees_with_spherical_constant(self, n, lam):
        res = minimize_profile(diagonal(n, lam))
        assert res.constant == pytest.approx(c_spherical(n, lam).c_spherical, rel=1e-4)

    def test_stalled(self, disc22):
        with pytest.raises(Stalled):
            minimize_profile(E22, MinimizeOptions(init="random", seed=7, max_iters=3), discretization=disc22)

    def test_needs_negative_q(self):
        with pytest.raises(OutOfRange):
            minimize_profile(SimpleNamespace(n=2, lam=2.0, p=0.5, q=0.5))
