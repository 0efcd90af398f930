"""The Euler-Lagrange integral system and its classified solutions.

The system couples a boundary function ``u`` and a half-space function ``v``::

    u(x) = int_{R^n_+} |x - y|**lam v(y)**(-kappa) dy,
    v(y) = int_{boundary} |x - y|**lam u(x)**(-theta) dx,

with ``kappa = 1 + 2n/lam`` and ``theta = 1 + (2n - 2)/lam``. Classified
solutions have ``u(x) = a (b**2 + |x - center|**2)**(lam/2)``. Off the
boundary ``v`` is *defined* by the second equation, evaluated by quadrature.
All fields here are radial about ``center``, so every quadrature runs in the
tangential radius ``|x - center|``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import NoConvergence, RootBracketFailure
from .exponents import classification_exponents, diagonal
from .geometry import critical_radius, ms_reflect
from .operators import HalfSpaceProfile, extend, halfspace_rule, point_kernel, reduced_extension, reduced_kernel
from .quadrature import sphere_area
from .radial import RadialProfile

AMPLITUDE_BRACKET = (1e-3, 1e3)
SAMPLE_RADII = (0.0, 0.1, 1.0, 10.0, 1e3)
# the source profile is smooth; these radii only split the radial quadrature into panels
_SOURCE_RADII = np.concatenate([[0.0], np.geomspace(1e-2, 1e2, 17)])


@dataclass(frozen=True)
class ClassifiedSolution:
    n: int
    lam: float
    a: float
    b: float
    center: np.ndarray
    kappa: float = field(init=False)
    theta: float = field(init=False)

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be >= 2")
        if not (self.lam > 0 and self.a > 0 and self.b > 0):
            raise ValueError("lambda, a and b must be positive")
        c = np.asarray(getattr(self.center, "coords", self.center), dtype=float).reshape(-1)
        if c.size == 0:
            c = np.zeros(self.n - 1)
        if c.size != self.n - 1:
            raise ValueError(f"center must have {self.n - 1} coordinates")
        kappa, theta = classification_exponents(self.n, self.lam)
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "kappa", kappa)
        object.__setattr__(self, "theta", theta)

    # -- fields as functions of the tangential radius -------------------------

    def u_radial(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return self.a * (self.b**2 + r * r) ** (self.lam / 2)

    def source_profile(self) -> RadialProfile:
        """``u**(-theta)`` as a boundary profile; it decays like ``r**-(lam + 2n - 2)``."""
        a, b, lam, theta = self.a, self.b, self.lam, self.theta
        fn = lambda r: a ** (-theta) * (b * b + np.asarray(r, float) ** 2) ** (-lam * theta / 2)  # noqa: E731
        return RadialProfile.from_function(fn, self.n - 1, _SOURCE_RADII * b, tail=lam * theta, monotone=True)

    def v_radial(self, rho, h) -> np.ndarray:
        """The induced ``v`` at tangential radius ``rho`` and height ``h``."""
        return np.asarray(extend(self.source_profile(), self.lam, rho, h), dtype=float)

    def forcing(self) -> HalfSpaceProfile:
        """``v**(-kappa)`` as a half-space profile."""
        src = self.source_profile()
        kappa, lam = self.kappa, self.lam
        return HalfSpaceProfile.from_function(lambda rho, h: extend(src, lam, rho, h) ** (-kappa), self.n, grid=3)

    # -- fields at points ---------------------------------------------------

    def _radius(self, x) -> np.ndarray:
        x = np.asarray(getattr(x, "coords", x), dtype=float)
        if x.shape[-1] != self.n - 1:
            raise ValueError(f"boundary points have {self.n - 1} coordinates")
        return np.linalg.norm(x - self.center, axis=-1)

    def u(self, x) -> np.ndarray:
        """``u`` at boundary points (coordinate axis last)."""
        return self.u_radial(self._radius(x))

    def v_boundary(self, x) -> np.ndarray:
        """The classified boundary trace of ``v``, which is ``u`` itself."""
        return self.u(x)

    def v(self, y) -> np.ndarray:
        """Induced ``v`` at half-space points ``(x', h)``."""
        y = np.asarray(getattr(y, "coords", y), dtype=float)
        rho = np.linalg.norm(y[..., :-1] - self.center, axis=-1)
        return self.v_radial(rho, y[..., -1])

    def with_amplitude(self, a: float) -> "ClassifiedSolution":
        return ClassifiedSolution(self.n, self.lam, a, self.b, self.center)


def classified_pair(n: int, lam: float, a: float, b: float, center=None) -> ClassifiedSolution:
    """Classified solution with amplitude ``a``, scale ``b`` and boundary centre ``center``."""
    return ClassifiedSolution(n, lam, a, b, np.zeros(n - 1) if center is None else center)


# ---------------------------------------------------------------------------
# amplitude
# ---------------------------------------------------------------------------


def first_equation_rhs(sol: ClassifiedSolution, r) -> np.ndarray:
    """Right side of the first equation at tangential radii ``r``.

    The induced ``v`` is evaluated once, on a single rule graded toward
    every requested radius.
    """
    r = np.atleast_1d(np.asarray(r, dtype=float))
    rule = halfspace_rule(sol.n, center=r, scale=sol.b)
    forcing = sol.v_radial(rule.rho, rule.h) ** (-sol.kappa)
    area = sphere_area(sol.n - 2) if sol.n > 2 else 2.0
    out = np.array([np.sum(rule.weights * forcing * point_kernel(rule.rho, c, rule.h, sol.lam, sol.n)) / area for c in r])
    if not np.all(np.isfinite(out)):
        raise NoConvergence("first equation produced non-finite values")
    return out


def amplitude_scaling_exponent(n: int, lam: float) -> float:
    """Exponent ``mu`` in ``a(b) = a(1) b**mu``.

    Substituting ``x -> b x`` shows that the first equation's output grows by
    ``b**(lam + n + kappa (n - 1))`` at amplitude one, while ``u`` grows by
    ``b**lam``; the fixed point ``a**(theta kappa - 1) = u / output`` then
    gives the exponent.
    """
    kappa, theta = classification_exponents(n, lam)
    return -(n + kappa * (n - 1)) / (theta * kappa - 1)


def amplitude_fixed_point(n: int, lam: float, b: float = 1.0, bracket: tuple[float, float] = AMPLITUDE_BRACKET) -> float:
    """Amplitude ``a`` for which both equations hold with unit constants.

    Scaling ``u`` by ``a`` scales ``v`` by ``a**-theta`` and the first
    equation's output by ``a**(theta kappa)``, so one quadrature at ``a = 1``
    fixes the whole scaling map; its root is then bracketed in ``log a``.

    Raises
    ------
    RootBracketFailure
        If the root lies outside ``bracket``.
    """
    unit = classified_pair(n, lam, 1.0, b)
    ratio = float(first_equation_rhs(unit, 0.0)[0]) / float(unit.u_radial(0.0))
    if not (ratio > 0 and np.isfinite(ratio)):
        raise NoConvergence("first equation returned a non-positive amplitude")
    power = unit.theta * unit.kappa
    excess = lambda s: (power - 1.0) * s + math.log(ratio)  # noqa: E731  (log of output/a at a = e^s)
    lo, hi = math.log(bracket[0]), math.log(bracket[1])
    if excess(lo) * excess(hi) > 0:
        raise RootBracketFailure(f"amplitude fixed point lies outside [{bracket[0]}, {bracket[1]}]")
    return math.exp(brentq(excess, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps))


def fixed_point_solution(n: int, lam: float, b: float = 1.0, center=None) -> ClassifiedSolution:
    return classified_pair(n, lam, amplitude_fixed_point(n, lam, b), b, center)


# ---------------------------------------------------------------------------
# residuals
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SystemResidual:
    """Relative residuals of the system at sample radii.

    ``res_u`` tests the first equation with the induced ``v``. ``res_v``
    tests the second equation: its quadrature value against the same
    integral computed through the log-radius reduced kernel. ``trace`` is
    ``sup |v(x, 0) - u(x)| / u(x)`` and ``trace_ratio`` lists ``v(x, 0) / u(x)``.
    """

    res_u: float
    res_v: float
    trace: float
    trace_ratio: np.ndarray

    def ok(self, tol: float = 1e-6, trace_tol: float = 1e-8) -> bool:
        return self.res_u <= tol and self.res_v <= tol and self.trace <= trace_tol


def _second_equation_reduced(sol: ClassifiedSolution, rho: np.ndarray, h: np.ndarray) -> np.ndarray:
    exps = diagonal(sol.n, sol.lam)
    kernel = reduced_kernel(sol.n, exps)
    src = sol.source_profile()
    p, q = exps.p, exps.q
    F = lambda s: np.exp((sol.n - 1) * s / p) * src(np.exp(s))  # noqa: E731
    # the integrand decays like exp(-(n - 1)(1/p' ) s) at both ends; 60 units of log radius are plenty
    lo, hi = math.log(sol.b) - 60.0, math.log(sol.b) + 60.0
    out = np.empty(rho.size)
    for i, (r, hh) in enumerate(zip(rho, h)):
        t = math.log(r)
        out[i] = math.exp(-sol.n * t / q) * reduced_extension(F, (lo, hi), kernel, t, hh / r)
    return out


def system_residual(sol: ClassifiedSolution, sample_radii=SAMPLE_RADII[:4], heights=(0.0, 1.0)) -> SystemResidual:
    """Residuals of both equations on the tangential radii ``sample_radii``.

    The second equation is probed at every ``(radius, height)`` pair with
    positive radius (the reduced kernel lives on ``log |x|``).
    """
    r = np.asarray(sample_radii, dtype=float)
    u = sol.u_radial(r)
    rhs_u = first_equation_rhs(sol, r)
    res_u = float(np.max(np.abs(rhs_u - u) / u))
    pos = r[r > 0]
    R, H = np.meshgrid(pos, np.asarray(heights, float), indexing="ij")
    R, H = R.ravel(), H.ravel()
    v_quad = sol.v_radial(R, H)
    v_red = _second_equation_reduced(sol, R, H)
    res_v = float(np.max(np.abs(v_quad - v_red) / np.abs(v_red))) if R.size else 0.0
    trace_v = sol.v_radial(r, np.zeros_like(r))
    ratio = trace_v / u
    return SystemResidual(res_u, res_v, float(np.max(np.abs(ratio - 1.0))), ratio)


# ---------------------------------------------------------------------------
# growth and the integral identity
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GrowthReport:
    """Growth limits and the two masses of the integral identity.

    ``growth_u = u(x)/|x|**lam`` and ``growth_v = v(y)/|y|**lam`` at radius
    ``radius``; ``limit_u = int v**-kappa`` and ``limit_v = int u**-theta``
    are their predicted limits. ``mass_u = int u**(1 - theta)`` and
    ``mass_v = int v**(1 - kappa)`` should coincide.
    """

    radius: float
    growth_u: float
    limit_u: float
    growth_v: float
    limit_v: float
    mass_u: float
    mass_v: float
    sandwich_constant: float
    sandwich_ok: bool

    @property
    def growth_u_error(self) -> float:
        return abs(self.growth_u / self.limit_u - 1.0)

    @property
    def growth_v_error(self) -> float:
        return abs(self.growth_v / self.limit_v - 1.0)

    @property
    def identity_error(self) -> float:
        return abs(self.mass_u / self.mass_v - 1.0)


def _boundary_power_mass(sol: ClassifiedSolution, power: float) -> float:
    prof = RadialProfile.from_function(lambda r: sol.u_radial(r) ** power, sol.n - 1,
                                       np.concatenate([[0.0], sol.b * np.geomspace(1e-3, 1e3, 61)]),
                                       tail=-sol.lam * power)
    nodes, weights = prof.radial_rule()
    return float(np.sum(weights * prof(nodes)))


def _halfspace_power_mass(sol: ClassifiedSolution, power: float) -> float:
    rule = halfspace_rule(sol.n, scale=sol.b)
    vals = sol.v_radial(rule.rho, rule.h)
    total = float(np.sum(rule.weights * vals**power))
    if not np.isfinite(total):
        raise NoConvergence("half-space mass of v is not finite")
    return total


def growth_and_identity_checks(sol: ClassifiedSolution, radius: float = 1e3) -> GrowthReport:
    """Growth ratios at ``radius`` against their limits, the integral identity and the sandwich bound."""
    lam = sol.lam
    growth_u = float(sol.u_radial(radius)) / radius**lam
    growth_v = float(sol.v_radial(0.0, radius)) / radius**lam
    limit_u = _halfspace_power_mass(sol, -sol.kappa)
    limit_v = _boundary_power_mass(sol, -sol.theta)
    mass_u = _boundary_power_mass(sol, 1.0 - sol.theta)
    mass_v = _halfspace_power_mass(sol, 1.0 - sol.kappa)
    C = max(sol.a * sol.b**lam, sol.a * 2.0 ** (lam / 2), 1.0 / min(sol.a * sol.b**lam, sol.a))
    r = np.geomspace(1e-3, 1e3, 61)
    u = sol.u_radial(r)
    base = 1.0 + r**lam
    sandwich = bool(np.all(base / C <= u) and np.all(u <= C * base))
    return GrowthReport(radius, growth_u, limit_u, growth_v, limit_v, mass_u, mass_v, C, sandwich)


# ---------------------------------------------------------------------------
# moving spheres
# ---------------------------------------------------------------------------


def critical_radius_of(sol: ClassifiedSolution, x) -> float:
    return critical_radius(x, sol.center, sol.b)


def moving_sphere_invariance(sol: ClassifiedSolution, x, nu: float | None = None, grid=None, points: int = 50,
                             seed: int = 0) -> float:
    """Sup of ``|u_{x,nu} - u| / u`` over a test grid of boundary points.

    ``nu`` defaults to the critical radius, where the residual vanishes up to
    rounding. The default grid holds ``points`` random boundary points at
    radii spread over ``[1e-2, 1e2]`` around ``x``, away from ``x`` itself.
    """
    x = np.asarray(getattr(x, "coords", x), dtype=float).reshape(-1)
    nu = critical_radius_of(sol, x) if nu is None else float(nu)
    if grid is None:
        rng = np.random.default_rng(seed)
        d = rng.standard_normal((points, sol.n - 1))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        grid = x + d * np.geomspace(1e-2, 1e2, points)[:, None]
    grid = np.asarray(grid, dtype=float)
    reflected = ms_reflect(sol.u, x, nu, sol.lam)(grid)
    u = sol.u(grid)
    return float(np.max(np.abs(reflected - u) / u))
