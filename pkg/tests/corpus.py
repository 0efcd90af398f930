"""Shared inputs for operator and acceptance tests."""

import itertools

import numpy as np

from rhls.operators import HalfSpaceProfile
from rhls.radial import RadialProfile


def bump(radius: float, power: int, dim: int, height: float = 1.0) -> RadialProfile:
    """``height * (1 - r^2/R^2)_+^power``; ``power = 0`` is an indicator."""
    if power == 0:
        return RadialProfile.indicator(radius, dim, height)
    fn = lambda r: height * np.maximum(1.0 - (np.asarray(r, float) / radius) ** 2, 0.0) ** power  # noqa: E731
    return RadialProfile.from_function(fn, dim, support=radius, monotone=True)


def half_bump(n: int, radius: float, power: int, height: float = 1.0) -> HalfSpaceProfile:
    if power == 0:
        return HalfSpaceProfile.half_ball(n, radius, height)
    fn = lambda rho, h: height * np.maximum(1.0 - (rho * rho + h * h) / radius**2, 0.0) ** power  # noqa: E731
    return HalfSpaceProfile.from_function(fn, n, support=radius)


def annulus_bump(lo: float, hi: float, dim: int) -> RadialProfile:
    """Smooth bump supported on ``lo <= r <= hi``."""
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)

    def fn(r):
        x = (np.asarray(r, float) - mid) / half
        return np.where(np.abs(x) < 1, (1 - x * x) ** 3, 0.0)

    radii = np.linspace(0.0, hi, 65)
    return RadialProfile(radii, fn(radii), dim, fn=fn, knots=(lo,))


def duality_corpus():
    """Twenty compactly supported ``(n, lam, f, g)`` cases."""
    cases = []
    shapes = [(1.0, 0, 1.0, 0), (1.5, 1, 0.8, 2), (0.7, 2, 1.3, 1), (1.2, 0, 2.0, 1), (2.0, 1, 0.6, 0)]
    for (n, lam), (rf, kf, rg, kg) in itertools.islice(
        itertools.product([(2, 2.0), (2, 1.0), (2, 0.7), (3, 1.5)], shapes), 20
    ):
        cases.append((n, lam, bump(rf, kf, n - 1), half_bump(n, rg, kg)))
    return cases
