"""Sharp constants on the diagonal exponent family.

The constant is evaluated on the sphere: after stereographic projection
the extremal boundary function becomes constant on the equator, so only
the equatorial average of ``|xi - eta|**lam`` is needed. It depends on the
height ``t`` of ``xi`` alone,

    avg_eta |xi - eta|**lam = 2**(lam/2) 2F1(-lam/4, (2 - lam)/4; n/2; 1 - t**2),

and the outer integral runs over the upper hemisphere. The log-potential
``H`` and the log-HLS constant are the derivatives at ``lam = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.special import gammaln, hyp2f1

from .errors import MomentDiverges, NoConvergence
from .operators import HalfSpaceProfile, halfspace_rule, sphere_area
from .quadrature import (
    DEFAULT_SPEC,
    IntegralResult,
    QuadratureSpec,
    integrate_halfline,
    integrate_hemisphere_zonal,
    integrate_interval,
    integrate_sphere_zonal,
    panel_rule,
)
from .radial import RadialProfile

Inner = Literal["closed-form", "quadrature"]


@dataclass(frozen=True)
class ConstantReport:
    n: int
    lam: float
    c_spherical: float
    error_estimate: float
    c_closed_form: float | None = None
    inner_profile: tuple = field(default=(), repr=False)

    def __post_init__(self):
        if not self.c_spherical > 0:
            raise ValueError("the constant must be positive")


def _check_n(n: int) -> int:
    if int(n) != n or n < 2:
        raise ValueError(f"n must be an integer >= 2, got {n}")
    return int(n)


# ---------------------------------------------------------------------------
# spherical constant
# ---------------------------------------------------------------------------


def inner_average(n: int, lam: float, t, method: Inner = "closed-form", spec: QuadratureSpec = DEFAULT_SPEC):
    """Equatorial average of ``|xi - eta|**lam`` for ``xi`` at height ``t``.

    ``method="quadrature"`` integrates over the equator ``S^{n-1}`` directly
    and serves as an independent check of the hypergeometric closed form.
    """
    t = np.asarray(t, dtype=float)
    if method == "closed-form":
        s2 = np.clip(1.0 - t * t, 0.0, 1.0)
        return 2.0 ** (lam / 2) * hyp2f1(-lam / 4, (2 - lam) / 4, n / 2, s2)
    out = np.empty(t.size)
    for i, ti in enumerate(t.ravel()):
        s = math.sqrt(max(0.0, 1.0 - ti * ti))
        g = lambda w, s=s: (2.0 - 2.0 * s * np.asarray(w)) ** (lam / 2)  # noqa: E731
        if n - 1 == 1:
            res = integrate_sphere_zonal(g, 1, spec, normalized=True, points=[0.0])
        else:
            res = integrate_sphere_zonal(g, n - 1, spec, normalized=True)
        out[i] = res.value
    return out.reshape(t.shape)


def c_spherical(
    n: int, lam: float, spec: QuadratureSpec = DEFAULT_SPEC, inner: Inner = "closed-form", profile_points: int = 11
) -> ConstantReport:
    """Sharp constant ``C(n, lam)`` on the diagonal family, from its spherical form.

    The ``-2n/lam`` power of the inner average is taken in log space so that
    small ``lam`` does not overflow.

    Raises
    ------
    NoConvergence
        If the hemisphere quadrature fails.
    """
    n = _check_n(n)
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    heights = np.linspace(0.0, 1.0, profile_points)
    if lam == 0:
        return ConstantReport(n, 0.0, 1.0, 0.0, None, tuple(zip(heights, np.ones_like(heights))))

    def integrand(t):
        log_inner = np.log(inner_average(n, lam, t, inner, spec))
        return np.exp(-(2 * n / lam) * log_inner)

    res = integrate_hemisphere_zonal(integrand, n, spec)
    if not (res.value > 0 and np.isfinite(res.value)):
        raise NoConvergence("hemisphere integral is not positive and finite")
    log_c = -(lam / (2 * (n - 1))) * math.log(sphere_area(n - 1)) - (lam / (2 * n)) * math.log(res.value)
    c = math.exp(log_c)
    err = c * (lam / (2 * n)) * res.error_estimate / res.value
    closed = c_explicit_lambda2(n) if lam == 2 else None
    prof = tuple(zip(heights.tolist(), np.atleast_1d(inner_average(n, lam, heights, "closed-form")).tolist()))
    return ConstantReport(n, float(lam), c, err, closed, prof)


def c_explicit_lambda2(n: int) -> float:
    """Closed-form constant at ``lam = 2`` via log-Gamma."""
    n = _check_n(n)
    log_c = (
        (-1 + 1 / n) * math.log(2)
        - math.log(math.pi)
        + (gammaln(n) - gammaln(n / 2)) / n
        + (gammaln(n - 1) - gammaln((n - 1) / 2)) / (n - 1)
    )
    return math.exp(log_c)


@dataclass(frozen=True)
class AuxIntegrals:
    """Closed forms and quadratures of the three integrals behind the ``lam = 2`` constant."""

    I_comp: float
    I_a2: float
    I_a3: float
    I_comp_quad: float
    I_comp_moment_quad: float
    I_a2_quad: float
    I_a3_quad: float

    def max_rel_discrepancy(self) -> float:
        pairs = (
            (self.I_comp, self.I_comp_quad),
            (self.I_comp, self.I_comp_moment_quad),
            (self.I_a2, self.I_a2_quad),
            (self.I_a3, self.I_a3_quad),
        )
        return max(abs(a - b) / abs(a) for a, b in pairs)


def aux_integrals(n: int, spec: QuadratureSpec = DEFAULT_SPEC) -> AuxIntegrals:
    """``int (1+|x|^2)^-n dx``, ``int (1+|x|^2)^(1-n) dx`` on the boundary and ``int (1+|y|^2)^-n dy`` on the half space.

    The first also equals ``int |x|^2 (1+|x|^2)^-n dx``; both forms are
    integrated numerically next to the Gamma-function closed forms.
    """
    n = _check_n(n)
    pi = math.pi
    I_comp = pi ** ((n - 1) / 2) * math.exp(gammaln((n + 1) / 2) - gammaln(n))
    I_a2 = pi ** ((n - 1) / 2) * math.exp(gammaln((n - 1) / 2) - gammaln(n - 1))
    I_a3 = 0.5 * pi ** (n / 2) * math.exp(gammaln(n / 2) - gammaln(n))
    wb = sphere_area(n - 2)
    wh = 0.5 * sphere_area(n - 1)
    q_comp = wb * integrate_halfline(lambda r: (1 + r * r) ** (-n) * r ** (n - 2), spec).value
    q_mom = wb * integrate_halfline(lambda r: (1 + r * r) ** (-n) * r**n, spec).value
    q_a2 = wb * integrate_halfline(lambda r: (1 + r * r) ** (1 - n) * r ** (n - 2), spec).value
    q_a3 = wh * integrate_halfline(lambda r: (1 + r * r) ** (-n) * r ** (n - 1), spec).value
    return AuxIntegrals(I_comp, I_a2, I_a3, q_comp, q_mom, q_a2, q_a3)


def compose_aux(n: int, aux: AuxIntegrals, quadrature: bool = False) -> float:
    """Quotient of the explicit extremal pair built from the auxiliary integrals."""
    if quadrature:
        ic, a2, a3 = aux.I_comp_quad, aux.I_a2_quad, aux.I_a3_quad
    else:
        ic, a2, a3 = aux.I_comp, aux.I_a2, aux.I_a3
    return ic * a3 ** (-1 / n) * a2 ** (-n / (n - 1))


# ---------------------------------------------------------------------------
# log potential and the log-HLS constant
# ---------------------------------------------------------------------------


def h_potential(n: int, t: float, spec: QuadratureSpec = DEFAULT_SPEC, moment: int = 1) -> float:
    """Equatorial average of ``ln|xi - eta|**moment`` for ``xi`` at height ``t``.

    ``moment=1`` is the log potential ``H``; ``moment=2`` gives the second
    moment, bounded uniformly in ``t``. The logarithmic singularity on the
    equator (``t = 0``) is handled by a breakpoint at the singular cosine.
    """
    n = _check_n(n)
    if not 0 <= t <= 1:
        raise ValueError("height must lie in [0, 1]")
    s = math.sqrt(max(0.0, 1.0 - t * t))

    def g(w):
        w = np.asarray(w, dtype=float)
        # |xi - eta|^2 = 2 - 2 s w = 2(1 - w) + 2 t^2 w / (1 + s) written to avoid cancellation
        d2 = 2.0 * (1.0 - w) + 2.0 * w * (t * t) / (1.0 + s)
        # the singular end point itself carries no mass
        return np.where(d2 > 0, (0.5 * np.log(np.where(d2 > 0, d2, 1.0))) ** moment, 0.0)

    k = n - 1
    if k == 1:
        # work in the angle so that the distance near the singular point keeps full precision
        def g_angle(phi):
            phi = np.asarray(phi, dtype=float)
            d2 = 2.0 * t * t / (1.0 + s) + 4.0 * s * np.sin(0.5 * phi) ** 2
            return np.where(d2 > 0, (0.5 * np.log(np.where(d2 > 0, d2, 1.0))) ** moment, 0.0)

        res = integrate_interval(g_angle, 0.0, math.pi, spec).scaled(1.0 / math.pi)
    else:
        res = integrate_sphere_zonal(g, k, spec, normalized=True, points=[1.0 - 1e-3, 1.0 - 1e-6])
    if not np.isfinite(res.value):
        raise NoConvergence("log potential did not converge")
    return res.value


def _h_hemisphere_integral(n: int, spec: QuadratureSpec) -> IntegralResult:
    def integrand(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return np.array([math.exp(-2 * n * h_potential(n, float(ti), spec)) for ti in t]).reshape(np.shape(t))

    return integrate_hemisphere_zonal(lambda t: integrand(t) if np.ndim(t) else float(integrand(t)[0]), n, spec)


def c_n_log(n: int, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Log-HLS constant ``C_n`` from the spherical expression (slope of ``C(n, lam)`` at 0)."""
    n = _check_n(n)
    res = _h_hemisphere_integral(n, spec)
    if not (res.value > 0 and np.isfinite(res.value)):
        raise NoConvergence("hemisphere integral of exp(-2nH) is not positive and finite")
    return -math.log(sphere_area(n - 1)) / (2 * (n - 1)) - math.log(res.value) / (2 * n)


def c_near_zero(n: int, lam: float, spec: QuadratureSpec = DEFAULT_SPEC, c_log: float | None = None) -> float:
    """First-order prediction ``1 + lam * C_n`` for small ``lam``."""
    if lam == 0:
        return 1.0
    return 1.0 + lam * (c_n_log(n, spec) if c_log is None else c_log)


# ---------------------------------------------------------------------------
# log-HLS functional
# ---------------------------------------------------------------------------


def log_zonal(A, B, k: int) -> np.ndarray:
    """``int_{S^k} (1/2) ln(A - B w_1) dw`` for ``A >= |B|``."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if k == 0:
        with np.errstate(divide="ignore"):
            return 0.5 * (np.log(A - B) + np.log(A + B))
    beta = np.where(A > 0, B / np.where(A > 0, A, 1.0), 0.0)
    beta = np.clip(beta, 0.0, 1.0)
    if k == 1:
        avg = np.log(0.5 * (1.0 + np.sqrt(np.maximum(1.0 - beta * beta, 0.0))))
    elif k == 2:
        with np.errstate(divide="ignore", invalid="ignore"):
            xlx = lambda u: np.where(u > 0, u * np.log(np.where(u > 0, u, 1.0)), 0.0)  # noqa: E731
            avg = np.where(beta > 1e-6, (xlx(1 + beta) - xlx(1 - beta)) / (2 * beta) - 1.0, -beta * beta / 6)
    else:
        # Gauss-Legendre in w, graded toward the logarithmic end point w = 1
        brk = np.unique(np.concatenate([[-1.0, 0.0], 1.0 - 0.5 ** np.arange(1, 50), [1.0]]))
        w, wt = panel_rule(brk, 12)
        wt = wt * (1 - w * w) ** ((k - 2) / 2) * sphere_area(k - 1) / sphere_area(k)
        avg = np.sum(wt * np.log1p(-beta[..., None] * w), axis=-1)
    # avg is the mean of ln(1 - beta w); the factor 1/2 turns ln|.|^2 into ln|.|
    with np.errstate(divide="ignore"):
        return sphere_area(k) * 0.5 * (np.log(A) + avg)


def log_extension(f: RadialProfile, rho, h) -> np.ndarray:
    """``int f(x) ln|x - y| dx`` for a radial boundary density and ``y = (rho e, h)``."""
    from .operators import inner_rule

    n = f.dim + 1
    r, hh = np.broadcast_arrays(np.asarray(rho, dtype=float), np.asarray(h, dtype=float))
    shape = r.shape
    r, hh = r.ravel(), hh.ravel()
    out = np.empty(r.size)
    step = max(1, 2_000_000 // inner_rule(f, r[:1], hh[:1])[0].shape[1])
    for i in range(0, r.size, step):
        sl = slice(i, i + step)
        nodes, weights = inner_rule(f, r[sl], hh[sl])
        A = nodes**2 + r[sl, None] ** 2 + hh[sl, None] ** 2
        B = 2.0 * nodes * r[sl, None]
        if n == 2:
            with np.errstate(divide="ignore"):
                ker = 0.5 * (np.log((nodes - r[sl, None]) ** 2 + hh[sl, None] ** 2) + np.log(A + B))
        else:
            ker = log_zonal(A, B, n - 2)
        with np.errstate(invalid="ignore"):
            vals = np.where(weights > 0, weights * f(nodes) * nodes ** (n - 2) * ker, 0.0)
        out[sl] = np.sum(vals, axis=1)
    return out.reshape(shape)


def f0_profile(n: int) -> RadialProfile:
    """Unit-mass log-HLS extremal ``(2/(1+|x|^2))**(n-1) / |S^{n-1}|`` on ``R^{n-1}``.

    The exponent is ``n - 1``; with ``-(n - 1)`` the function would not be
    integrable.
    """
    n = _check_n(n)
    area = sphere_area(n - 1)
    fn = lambda r: (2.0 / (1.0 + np.asarray(r) ** 2)) ** (n - 1) / area  # noqa: E731
    return RadialProfile.from_function(fn, n - 1, tail=2.0 * (n - 1), monotone=True)


def loghls_extremal_g(f: RadialProfile) -> HalfSpaceProfile:
    """Half-space partner ``c exp(-2n int f ln|x - y| dx)`` of a unit-mass boundary density."""
    n = f.dim + 1
    base = lambda rho, h: np.exp(-2 * n * log_extension(f, rho, h))  # noqa: E731
    rule = halfspace_rule(n)
    mass = float(np.sum(rule.weights * base(rule.rho, rule.h)))
    c = 1.0 / mass
    return HalfSpaceProfile.from_function(lambda rho, h: c * base(rho, h), n, grid=3)


@dataclass(frozen=True)
class LogHLSTerms:
    entropy_f: float
    entropy_g: float
    interaction: float
    c_n: float

    @property
    def deficit(self) -> float:
        return self.entropy_f + self.entropy_g - self.c_n + self.interaction


def loghls_terms(f: RadialProfile, g: HalfSpaceProfile, c_n: float | None = None, mass_tol: float = 1e-6) -> LogHLSTerms:
    """Weighted entropies, interaction and constant entering the log-HLS deficit.

    Raises
    ------
    ValueError
        If ``f`` or ``g`` does not have unit mass.
    MomentDiverges
        If a logarithmic moment is infinite.
    """
    n = f.dim + 1
    if g.n != n:
        raise ValueError("f and g live in different dimensions")
    if f.tail is not None and f.values[-1] > 0 and f.tail <= n - 1:
        raise MomentDiverges("boundary density has no finite logarithmic moment")
    nodes, weights = f.radial_rule()
    fv = f(nodes)
    mf = float(np.sum(weights * fv))
    rule = halfspace_rule(n, support=g.support)
    gv = g(rule.rho, rule.h)
    mg = float(np.sum(rule.weights * gv))
    if abs(mf - 1) > mass_tol or abs(mg - 1) > mass_tol:
        raise ValueError(f"densities must have unit mass, got {mf:.9g} and {mg:.9g}")
    with np.errstate(divide="ignore", invalid="ignore"):
        mom_f = float(np.sum(weights * fv * np.log1p(nodes**2)))
        mom_g = float(np.sum(rule.weights * gv * np.log1p(rule.rho**2 + rule.h**2)))
        ent_f = float(np.sum(np.where(fv > 0, weights * fv * np.log(np.where(fv > 0, fv, 1.0)), 0.0)))
        ent_g = float(np.sum(np.where(gv > 0, rule.weights * gv * np.log(np.where(gv > 0, gv, 1.0)), 0.0)))
    if not (np.isfinite(mom_f) and np.isfinite(mom_g)):
        raise MomentDiverges("logarithmic moment is not finite")
    keep = gv > 0
    phi = log_extension(f, rule.rho[keep], rule.h[keep])
    inter = float(np.sum(rule.weights[keep] * gv[keep] * phi))
    cn = c_n_log(n) if c_n is None else c_n
    return LogHLSTerms(ent_f / (2 * (n - 1)), ent_g / (2 * n), inter, cn)


def loghls_deficit(f: RadialProfile, g: HalfSpaceProfile, c_n: float | None = None) -> float:
    """Right side minus left side of the log-HLS inequality (nonnegative)."""
    return loghls_terms(f, g, c_n).deficit


def c_n_log_flat(n: int) -> float:
    """``C_n`` from its flat-space expression in terms of ``f0`` (cross-check of :func:`c_n_log`)."""
    n = _check_n(n)
    area = sphere_area(n - 1)
    f = f0_profile(n)
    nodes, weights = f.radial_rule()
    F0 = area * f(nodes)
    ent = float(np.sum(weights * F0 * np.log(F0)))
    rule = halfspace_rule(n)
    z = float(np.sum(rule.weights * np.exp(-2 * n * log_extension(f, rule.rho, rule.h))))
    return -math.log(area) / (2 * (n - 1)) + ent / (2 * (n - 1) * area) - math.log(z) / (2 * n)
