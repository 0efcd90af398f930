"""Radial profiles on the boundary hyperplane and rearrangement tools.

A :class:`RadialProfile` describes a function ``f(x) = F(|x|)`` on
``R^dim``. Between grid nodes it is either piecewise linear (the default)
or piecewise constant; beyond the last node it vanishes, or follows a
power tail ``F(r_last) (r / r_last)**(-tail)``. A profile may also carry an
exact callable, which the integrators prefer over the interpolant.

Measures of superlevel sets use the unit-ball volume
``omega_k = pi**(k/2) / Gamma(k/2 + 1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np

from .errors import NegativeValue, NoConvergence, NotMonotone, SignViolation
from .quadrature import (
    DEFAULT_SPEC,
    QuadratureSpec,
    ball_volume,
    integrate_interval,
    panel_rule,
    sphere_area,
)

Interp = Literal["linear", "step"]


@dataclass(frozen=True)
class LevelMeasure:
    level: float
    measure: float

    def __post_init__(self):
        if not self.measure >= 0:
            raise ValueError("measure must be nonnegative")


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Nonnegative radial function on ``R^dim`` sampled on a radius grid.

    Parameters
    ----------
    radii, values
        Strictly increasing radii ``>= 0`` and the nonnegative values there.
    dim
        Dimension of the space the profile lives on (``n - 1`` for the
        boundary of the half space in ``R^n``).
    monotone
        Certifies that the profile is nonincreasing; checked on the samples.
    interp
        ``"linear"`` interpolates between nodes; ``"step"`` holds
        ``values[i]`` on ``[radii[i], radii[i+1])``.
    tail
        Power-law decay exponent beyond the last node, or ``None`` for
        compact support.
    fn
        Optional exact vectorised callable ``F(r)``; when given it defines the
        profile and the samples are only used for level-set bookkeeping.
    knots
        Extra radii where ``fn`` may fail to be smooth.
    measure_fn
        Optional exact map ``a -> |{F > a}|`` used by the distribution
        function instead of inverting ``fn``.
    """

    radii: np.ndarray
    values: np.ndarray
    dim: int
    monotone: bool = False
    interp: Interp = "linear"
    tail: float | None = None
    fn: Callable | None = field(default=None, repr=False)
    knots: tuple = ()
    measure_fn: Callable | None = field(default=None, repr=False)

    def __post_init__(self):
        r = np.asarray(self.radii, dtype=float).copy()
        v = np.asarray(self.values, dtype=float).copy()
        if r.ndim != 1 or r.shape != v.shape or r.size < 2:
            raise ValueError("radii and values must be 1-D arrays of equal length >= 2")
        if r[0] < 0 or np.any(np.diff(r) <= 0):
            raise ValueError("radii must be nonnegative and strictly increasing")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise NegativeValue("profile values must be finite and nonnegative")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.monotone and np.any(np.diff(v) > 0):
            raise NotMonotone("profile flagged monotone but values increase somewhere")
        if self.tail is not None and self.tail <= 0:
            raise ValueError("tail exponent must be positive")
        r.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "radii", r)
        object.__setattr__(self, "values", v)

    # -- constructors -------------------------------------------------------

    @classmethod
    def from_function(
        cls,
        fn: Callable,
        dim: int,
        radii=None,
        *,
        support: float | None = None,
        tail: float | None = None,
        monotone: bool = False,
    ) -> "RadialProfile":
        """Wrap an exact radial function.

        ``support`` marks a radius beyond which ``fn`` vanishes; otherwise
        ``tail`` must give the algebraic decay rate used for quadrature.
        """
        if support is None and tail is None:
            raise ValueError("give either a compact support radius or a tail exponent")
        if radii is None:
            top = support if support is not None else 1e3
            radii = np.concatenate([[0.0], np.geomspace(1e-3, 1.0, 40) * top])
            if support is not None:
                radii = np.unique(np.concatenate([np.linspace(0.0, support, 65), radii]))
        radii = np.asarray(radii, dtype=float)
        with np.errstate(all="ignore"):
            vals = np.asarray(fn(radii), dtype=float)
        return cls(radii, vals, dim, monotone=monotone, tail=None if support is not None else tail, fn=fn)

    @classmethod
    def indicator(cls, radius: float, dim: int, height: float = 1.0) -> "RadialProfile":
        """``height`` times the indicator of the closed ball of the given radius."""
        return cls(
            np.array([0.0, radius]),
            np.array([height, 0.0]),
            dim,
            monotone=True,
            interp="step",
            fn=lambda r: np.where(np.asarray(r) <= radius, height, 0.0),
        )

    # -- evaluation ---------------------------------------------------------

    @property
    def support(self) -> float:
        """Radius beyond which the profile vanishes (``inf`` with a tail)."""
        return math.inf if self.tail is not None else float(self.radii[-1])

    @property
    def breaks(self) -> np.ndarray:
        """Radii where the profile may fail to be smooth."""
        if self.fn is not None and self.interp == "linear":
            ends = [0.0] if math.isinf(self.support) else [0.0, self.support]
            return np.unique(np.concatenate([ends, np.asarray(self.knots, dtype=float)]))
        return self.radii

    def interpolant(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        rr, vv = self.radii, self.values
        if self.interp == "step":
            idx = np.clip(np.searchsorted(rr, r, side="right") - 1, 0, rr.size - 1)
            out = vv[idx]
        else:
            out = np.interp(r, rr, vv)
        out = np.where(r > rr[-1], 0.0, out)
        if self.tail is not None:
            with np.errstate(divide="ignore"):
                t = vv[-1] * (np.maximum(r, rr[-1]) / rr[-1]) ** (-self.tail)
            out = np.where(r > rr[-1], t, out)
        return out

    def __call__(self, r) -> np.ndarray:
        if self.fn is not None:
            r = np.asarray(r, dtype=float)
            return np.asarray(self.fn(r), dtype=float) * np.ones_like(r)
        return self.interpolant(r)

    def scaled(self, c: float) -> "RadialProfile":
        fn = None if self.fn is None else (lambda r, f=self.fn: c * f(r))
        mf = self.measure_fn and (lambda a, m=self.measure_fn: m(np.asarray(a) / c))
        return RadialProfile(self.radii, c * self.values, self.dim, self.monotone, self.interp, self.tail, fn, self.knots, mf)

    # -- radial quadrature --------------------------------------------------

    def radial_rule(
        self, order: int = 12, levels: int = 60, grade: bool = True, split: int = 1, extra=()
    ) -> tuple[np.ndarray, np.ndarray]:
        """Nodes and weights for ``int_{R^dim} F(|x|) dx`` as a radial integral.

        Panels follow the profile's breakpoints and continue into an inverted
        tail when the profile is not compactly supported. With ``grade`` they
        are refined geometrically toward every breakpoint (needed for powers
        ``F**p`` that lose smoothness where ``F`` vanishes); otherwise each
        panel is split into ``split`` equal pieces. ``extra`` lists radii where
        a co-integrand loses smoothness; panels are graded toward them too.
        """
        brk = np.unique(self.breaks)
        scale = float(brk[brk > 0][0]) if np.any(brk > 0) else 1.0
        top = float(brk[-1]) if np.isfinite(self.support) else max(float(brk[-1]), scale) * 2.0**30
        pts = [brk, [top]]
        if not np.isfinite(self.support):
            pts.append(scale * 2.0 ** np.arange(0, math.ceil(math.log2(top / scale))))
        if grade:
            pts.append(scale * 0.5 ** np.arange(1, levels))
            # refine toward interior breakpoints from both sides
            for b in brk[(brk > 0) & (brk <= top)]:
                gap = b * 0.5 ** np.arange(1, 40)
                pts.append(b - gap)
                pts.append(b + gap)
        elif split > 1:
            base = np.unique(np.clip(np.concatenate(pts), 0.0, top))
            pts.append(np.concatenate([np.linspace(a, b, split + 1) for a, b in zip(base[:-1], base[1:])]))
        for b in np.asarray(extra, dtype=float):
            if 0 < b < top:
                gap = b * 0.5 ** np.arange(1, 20)
                pts += [np.array([b]), b - gap, b + gap]
        allb = np.unique(np.clip(np.concatenate(pts), 0.0, top))
        nodes, weights = panel_rule(allb, order)
        if not np.isfinite(self.support):
            ub = np.concatenate([[0.0], 0.5 ** np.arange(levels, -1, -1)])
            un, uw = panel_rule(ub, order)
            nodes = np.concatenate([nodes, top / un])
            weights = np.concatenate([weights, top / un**2 * uw])
        jac = sphere_area(self.dim - 1) * nodes ** (self.dim - 1)
        return nodes, weights * jac


def _check_p(p: float) -> None:
    if not 0 < p <= 1:
        raise ValueError(f"p must lie in (0, 1], got {p}")


# ---------------------------------------------------------------------------
# distribution function
# ---------------------------------------------------------------------------


def superlevel_radius(profile: RadialProfile, level) -> np.ndarray:
    """Radius of the ball ``{F > level}`` for a nonincreasing profile.

    Exact for the interpolant; for profiles with an exact callable, the
    boundary is located by bisection between bracketing nodes.
    """
    if not profile.monotone:
        raise NotMonotone("distribution requires a profile certified nonincreasing")
    a = np.atleast_1d(np.asarray(level, dtype=float))
    if np.any(a <= 0):
        raise ValueError("levels must be positive")
    rr, vv = profile.radii, profile.values
    out = np.zeros_like(a)
    if profile.measure_fn is not None:
        m = np.asarray(profile.measure_fn(a), dtype=float)
        return ((m / ball_volume(profile.dim)) ** (1.0 / profile.dim)).reshape(np.shape(level))
    if profile.fn is not None:
        return _bisect_radius(profile, a).reshape(np.shape(level))
    # tail region: vv[-1] (r/r_last)^-tail > a
    if profile.tail is not None:
        t = a < vv[-1]
        out[t] = rr[-1] * (vv[-1] / a[t]) ** (1.0 / profile.tail)
        rest = ~t
    else:
        rest = np.ones(a.shape, dtype=bool)
    for k in np.nonzero(rest)[0]:
        ak = a[k]
        above = np.nonzero(vv > ak)[0]
        if above.size == 0:
            out[k] = 0.0
            continue
        i = above[-1]
        if profile.interp == "step" or i == rr.size - 1:
            out[k] = rr[i + 1] if (profile.interp == "step" and i + 1 < rr.size) else rr[i]
        else:
            # linear piece from (r_i, v_i > a) to (r_{i+1}, v_{i+1} <= a)
            v0, v1 = vv[i], vv[i + 1]
            out[k] = rr[i] + (rr[i + 1] - rr[i]) * (v0 - ak) / (v0 - v1)
    return out.reshape(np.shape(level))


def _bisect_radius(profile: RadialProfile, a: np.ndarray) -> np.ndarray:
    hi_r = profile.support if np.isfinite(profile.support) else profile.radii[-1]
    hi = np.full(a.shape, float(hi_r))
    if not np.isfinite(profile.support):
        # expand until F(hi) <= a
        for _ in range(200):
            grow = profile(hi) > a
            if not np.any(grow):
                break
            hi = np.where(grow, hi * 2.0, hi)
    lo = np.zeros_like(a)
    none = profile(lo) <= a
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        up = profile(mid) > a
        lo = np.where(up, mid, lo)
        hi = np.where(up, hi, mid)
    return np.where(none, 0.0, 0.5 * (lo + hi))


def distribution(profile: RadialProfile, level: float) -> LevelMeasure:
    """Lebesgue measure of ``{f > level}`` for a nonincreasing radial profile."""
    rho = float(superlevel_radius(profile, level))
    return LevelMeasure(float(level), ball_volume(profile.dim) * rho**profile.dim)


# ---------------------------------------------------------------------------
# rearrangement
# ---------------------------------------------------------------------------


def _shell_measure(dim: int, r0, r1):
    return ball_volume(dim) * (np.asarray(r1) ** dim - np.asarray(r0) ** dim)


def _linear_level_measure(profile: RadialProfile, a: np.ndarray) -> np.ndarray:
    """``|{F > a}|`` for an arbitrary piecewise-linear profile (no tail)."""
    rr, vv = profile.radii, profile.values
    r0, r1 = rr[:-1], rr[1:]
    v0, v1 = vv[:-1], vv[1:]
    a = a[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        cross = r0 + (r1 - r0) * (v0 - a) / (v0 - v1)
    lo = np.where(v0 > a, r0, np.where(v1 > a, cross, r1))
    hi = np.where(v1 > a, r1, np.where(v0 > a, cross, r0))
    return np.sum(_shell_measure(profile.dim, lo, np.maximum(lo, hi)), axis=1)


def rearrange(source, dim: int | None = None, cell_measure=None) -> RadialProfile:
    """Symmetric decreasing rearrangement.

    Parameters
    ----------
    source
        Either a :class:`RadialProfile` (possibly non-monotone), or an array
        of sample values, each standing for a cell of measure
        ``cell_measure`` on ``R^dim``.
    dim
        Required for sample input.
    cell_measure
        Scalar or per-sample measures for sample input.

    Returns
    -------
    RadialProfile
        A profile flagged monotone with the same superlevel measures as the
        input. In dimension >= 2 a piecewise-linear input yields a profile
        carrying the exact inverse of the distribution function.
    """
    if isinstance(source, RadialProfile):
        if np.any(source.values < 0):
            raise NegativeValue("cannot rearrange negative values")
        if source.tail is not None and not source.monotone:
            raise ValueError("rearranging a non-monotone profile with a power tail is not supported")
        if source.monotone:
            return source
        if source.interp == "step":
            widths = _shell_measure(source.dim, source.radii[:-1], source.radii[1:])
            return _from_cells(source.values[:-1], widths, source.dim)
        levels = np.unique(source.values)[::-1]
        rad = (_linear_level_measure(source, levels[1:]) / ball_volume(source.dim)) ** (1.0 / source.dim)
        radii = np.concatenate([[0.0], rad])
        values = levels.copy()
        # collapse zero-measure steps at the top (plateau of the maximum)
        keep = np.concatenate([[True], np.diff(radii) > 0])
        radii, values = radii[keep], values[keep]
        if values[-1] > 0:
            # the interpolant of the input vanishes beyond its last node
            radii = np.append(radii, radii[-1] * (1 + 1e-12) + 1e-300)
            values = np.append(values, 0.0)
        if source.dim == 1:
            # superlevel measures are linear in the level, so the rearranged
            # interpolant through the node levels is exact
            return RadialProfile(radii, values, 1, monotone=True)
        return RadialProfile(
            radii,
            values,
            source.dim,
            monotone=True,
            fn=_inverse_measure(source, float(levels[0])),
            knots=tuple(radii[1:-1]),
            measure_fn=lambda a, src=source: _linear_level_measure(src, np.atleast_1d(np.asarray(a, float))),
        )
    if dim is None or cell_measure is None:
        raise ValueError("sample input needs dim and cell_measure")
    vals = np.asarray(source, dtype=float).ravel()
    if np.any(vals < 0):
        raise NegativeValue("cannot rearrange negative values")
    meas = np.broadcast_to(np.asarray(cell_measure, dtype=float), vals.shape)
    return _from_cells(vals, meas, dim)


def _inverse_measure(source: RadialProfile, top: float) -> Callable:
    """Exact rearranged profile ``r -> sup{a : |{F > a}| > omega r^dim}``."""
    w = ball_volume(source.dim)

    def fn(r):
        r = np.asarray(r, dtype=float)
        target = (w * r**source.dim).ravel()
        lo = np.zeros_like(target)
        hi = np.full_like(target, top)
        for _ in range(64):
            mid = 0.5 * (lo + hi)
            big = _linear_level_measure(source, mid) > target
            lo = np.where(big, mid, lo)
            hi = np.where(big, hi, mid)
        return (0.5 * (lo + hi)).reshape(r.shape)

    return fn


def _from_cells(values: np.ndarray, measures: np.ndarray, dim: int) -> RadialProfile:
    """Step profile whose superlevel sets match those of weighted samples.

    Samples are binned by value: each distinct level keeps the total measure
    of the cells carrying it, and levels are stacked from the top down.
    """
    levels, inv = np.unique(values, return_inverse=True)
    mass = np.bincount(inv, weights=measures, minlength=levels.size)
    levels, mass = levels[::-1], mass[::-1]
    pos = levels > 0
    levels, mass = levels[pos], mass[pos]
    keep = mass > 0
    levels, mass = levels[keep], mass[keep]
    if levels.size == 0:
        return RadialProfile(np.array([0.0, 1.0]), np.array([0.0, 0.0]), dim, monotone=True, interp="step")
    cum = np.cumsum(mass)
    radii = np.concatenate([[0.0], (cum / ball_volume(dim)) ** (1.0 / dim)])
    values = np.concatenate([levels, [0.0]])
    return RadialProfile(radii, values, dim, monotone=True, interp="step")


# ---------------------------------------------------------------------------
# L^p masses
# ---------------------------------------------------------------------------


def _tail_mass(profile: RadialProfile, p: float) -> float:
    rl, vl, tau, d = profile.radii[-1], profile.values[-1], profile.tail, profile.dim
    if vl == 0:
        return 0.0
    if tau * p <= d:
        raise NoConvergence(f"power tail r^-{tau} has infinite {p}-mass in dimension {d}")
    return sphere_area(d - 1) * vl**p * rl**d / (tau * p - d)


def lp_mass_direct(profile: RadialProfile, p: float, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """``int F(|x|)**p dx`` by radial quadrature."""
    _check_p(p)
    if profile.fn is not None:
        if np.isfinite(profile.support) or profile.tail is not None:
            if profile.tail is not None and profile.tail * p <= profile.dim:
                raise NoConvergence("profile tail is too fat for this p")
        nodes, weights = profile.radial_rule()
        with np.errstate(all="ignore"):
            vals = profile(nodes) ** p
        if not np.all(np.isfinite(vals)):
            raise NoConvergence("profile is not finite on the quadrature nodes")
        return float(np.sum(weights * vals))
    rr, vv = profile.radii, profile.values
    total = 0.0
    if profile.interp == "step":
        total = float(np.sum(vv[:-1] ** p * _shell_measure(profile.dim, rr[:-1], rr[1:])))
    else:
        cw = sphere_area(profile.dim - 1)
        for i in range(rr.size - 1):
            v0, v1 = vv[i], vv[i + 1]
            if v0 == 0 and v1 == 0:
                continue
            f = lambda s, i=i, v0=v0, v1=v1: (v0 + (v1 - v0) * (s - rr[i]) / (rr[i + 1] - rr[i])) ** p * s ** (profile.dim - 1)
            # the p-th power has an algebraic endpoint singularity where the piece hits zero
            total += cw * integrate_interval(f, float(rr[i]), float(rr[i + 1]), spec).value
    if profile.tail is not None:
        total += _tail_mass(profile, p)
    return total


def lp_mass_layercake(profile: RadialProfile, p: float, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """``p int_0^inf |{F > a}| a**(p-1) da`` for a nonincreasing profile."""
    _check_p(p)
    prof = profile if profile.monotone else rearrange(profile)
    top = float(np.max(prof.values)) if prof.fn is None else float(prof(np.array([0.0]))[0])
    if top <= 0:
        return 0.0
    w = ball_volume(prof.dim)
    if prof.fn is None and prof.interp == "step":
        # superlevel measure is piecewise constant in a
        lv = np.concatenate([prof.values[:-1], [0.0]])
        meas = w * prof.radii[1:] ** prof.dim
        return float(np.sum(meas * (lv[:-1] ** p - lv[1:] ** p)))

    def integrand(t):
        # a = top * exp(-t) maps (0, top] to [0, inf)
        a = top * np.exp(-t)
        return w * superlevel_radius(prof, a) ** prof.dim * p * a**p

    levels = np.unique(prof.values[prof.values > 0]) if prof.fn is None else np.array([])
    pts = sorted(set(float(x) for x in np.log(top / levels) if x > 0))
    hi = 60.0 / p
    if prof.tail is not None:
        # in the tail the integrand is exactly geometric in t
        vl = prof.values[-1]
        t0 = math.log(top / vl) if vl > 0 else hi
        head = _layer_integral(integrand, 0.0, t0, pts, spec) if t0 > 0 else 0.0
        expo = p - prof.dim / prof.tail
        if vl > 0 and expo <= 0:
            raise NoConvergence("profile tail is too fat for this p")
        tail = (w * prof.radii[-1] ** prof.dim * p * vl**p / expo) if vl > 0 else 0.0
        return head + tail
    return _layer_integral(integrand, 0.0, hi, pts, spec)


def _layer_integral(fn, a, b, pts, spec):
    inner = [x for x in pts if a < x < b]
    brk = np.array([a] + inner + [b])
    total = 0.0
    for lo, hi in zip(brk[:-1], brk[1:]):
        total += integrate_interval(lambda t: float(fn(np.array([t]))[0]), float(lo), float(hi), spec).value
    return total


def lp_mass(profile: RadialProfile, p: float, spec: QuadratureSpec = DEFAULT_SPEC, cross_check: bool = False) -> float:
    """``||f||_p**p`` over ``R^dim``.

    With ``cross_check=True`` the layer-cake value is computed as well and
    :class:`NoConvergence` is raised if the two disagree beyond ``1e-6``
    relative.
    """
    direct = lp_mass_direct(profile, p, spec)
    if cross_check and profile.monotone:
        lc = lp_mass_layercake(profile, p, spec)
        if abs(lc - direct) > 1e-6 * max(abs(direct), 1e-300):
            raise NoConvergence(f"layer-cake {lc!r} and direct {direct!r} masses disagree")
    return direct


# ---------------------------------------------------------------------------
# proof-machinery checks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LayerCakeCheck:
    I_abc: float
    bound: float
    ok: bool
    stderr: float
    c_max: float


def claim_radius(u: float, v: float, n: int) -> float:
    """Largest ``c`` for which the superlevel-set interaction bound is asserted."""
    return max((u / (2.0 * ball_volume(n - 1))) ** (1.0 / (n - 1)), (v / ball_volume(n)) ** (1.0 / n))


def _uniform_ball(rng, m: int, dim: int, radius: float) -> np.ndarray:
    z = rng.standard_normal((m, dim))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    return z * (radius * rng.random((m, 1)) ** (1.0 / dim))


def layercake_bound_check(f: RadialProfile, g, a: float, b: float, c: float, seed: int = 0, samples: int = 1_000_000) -> LayerCakeCheck:
    """Monte Carlo check of ``I(a, b, c) >= u(a) v(b) / 2``.

    ``I(a, b, c)`` is the measure of pairs ``(x, y)`` with ``f(x) > a``,
    ``g(y) > b`` and ``|x - y| > c``. ``g`` is a half-space profile with a
    bounded support box. ``ok`` is evaluated with a three-sigma guard on the
    difference estimator and is only meaningful when ``c`` does not exceed
    :func:`claim_radius`.
    """
    if not (a > 0 and b > 0 and c >= 0):
        raise ValueError("need a, b > 0 and c >= 0")
    n = f.dim + 1
    rho_a = float(superlevel_radius(f, a))
    u = ball_volume(f.dim) * rho_a**f.dim
    rmax, hmax = g.bounding_box()
    box = (2 * rmax) ** (n - 1) * hmax
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    x = _uniform_ball(rng, samples, f.dim, rho_a)
    yt = rng.uniform(-rmax, rmax, (samples, n - 1))
    yh = rng.uniform(0.0, hmax, samples)
    inside = g(np.linalg.norm(yt, axis=1), yh) > b
    far = np.hypot(np.linalg.norm(x - yt, axis=1), yh) > c
    scale = u * box
    i_samp = scale * (inside & far)
    v_samp = box * inside
    diff = scale * inside * (far.astype(float) - 0.5)
    I = float(i_samp.mean())
    v = float(v_samp.mean())
    err = float(diff.std(ddof=1) / math.sqrt(samples))
    ok = bool(diff.mean() >= -3.0 * err)
    return LayerCakeCheck(I, u * v / 2.0, ok, err, claim_radius(u, v, n))


def reversed_holder_gap(phi: Callable, psi: Callable, p: float, domain: tuple[float, float], spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """``int phi psi - ||phi||_p ||psi||_{p'}`` on an interval, with ``p' = p/(p-1) < 0``.

    Nonnegative for nonnegative ``phi`` and positive ``psi``.
    """
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    a, b = domain
    probe = np.linspace(a, b, 2001)
    if np.any(np.asarray(psi(probe)) <= 0):
        raise SignViolation("psi must be strictly positive on the domain")
    pc = p / (p - 1)
    lhs = integrate_interval(lambda x: phi(x) * psi(x), a, b, spec).value
    fp = integrate_interval(lambda x: abs(phi(x)) ** p, a, b, spec).value
    gq = integrate_interval(lambda x: psi(x) ** pc, a, b, spec).value
    return lhs - fp ** (1 / p) * gq ** (1 / pc)
