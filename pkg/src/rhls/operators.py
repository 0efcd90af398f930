"""Extension and restriction operators, the pairing functional and negative norms.

Every deterministic path reduces to nested one-dimensional rules. For a
radial boundary function ``f(x) = F(|x|)`` the extension at a point with
tangential radius ``rho`` and height ``h`` is

    E F(rho, h) = int_0^inf F(s) s**(n-2) Z_{n-2}(s; rho, h) ds,

where ``Z_k`` integrates ``|x - y|**lam`` over the sphere ``S^k`` of
directions of ``x``. ``Z_k`` has a closed form through ``2F1``, a
two-point sum when ``k = 0``, and a finite moment sum for even integer
``lam``. Half-space integrals use polar panels ``(R, phi)`` refined toward
the boundary and toward the singular point of the kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import gamma, hyp2f1, rgamma

from .errors import EnvelopeMissing, NoConvergence, NonPositiveField, ZeroFunction
from .exponents import ExponentSet
from .quadrature import (
    Box,
    Envelope,
    IntegralResult,
    gauss_legendre,
    monte_carlo_pair_integral,
    panel_rule,
    power_kernel,
    sphere_area,
)
from .radial import RadialProfile, lp_mass, rearrange

INNER_ORDER = 8
OUTER_ORDER = 8
# graded levels toward the kernel singularity, and geometric decades kept on each side
GRADE_LEVELS = 40
DECADES = 30
CHUNK = 4_000_000


# ---------------------------------------------------------------------------
# zonal kernel
# ---------------------------------------------------------------------------


def _even_moments(k: int, m: int) -> np.ndarray:
    """Normalised moments ``avg_{S^k} w_1**(2i)`` for ``i = 0..m``."""
    out = np.ones(m + 1)
    for i in range(1, m + 1):
        out[i] = out[i - 1] * (2 * i - 1) / (k + 2 * i - 1)
    return out


def _hyp2f1_unit(a: float, b: float, c: float, z: np.ndarray) -> np.ndarray:
    """``2F1(a, b; c; z)`` on ``[0, 1]``.

    scipy's evaluation slows down by orders of magnitude as ``z -> 1``, so
    for ``z > 1/2`` the standard connection formula to ``1 - z`` is used
    whenever ``c - a - b`` is safely away from an integer.
    """
    out = np.empty_like(z)
    e = c - a - b
    far = z <= 0.5
    if abs(e - round(e)) < 0.05:
        return hyp2f1(a, b, c, z)
    out[far] = hyp2f1(a, b, c, z[far])
    w = 1.0 - z[~far]
    g1 = gamma(c) * gamma(e) * rgamma(c - a) * rgamma(c - b)
    g2 = gamma(c) * gamma(-e) * rgamma(a) * rgamma(b)
    out[~far] = g1 * hyp2f1(a, b, 1.0 - e, w) + g2 * w**e * hyp2f1(c - a, c - b, 1.0 + e, w)
    return out


def zonal(A, B, lam: float, k: int, AmB=None) -> np.ndarray:
    """``int_{S^k} (A - B w_1)**(lam/2) dw`` for ``A >= |B|``.

    ``AmB`` may supply ``A - B`` computed without cancellation.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    half = lam / 2
    if k == 0:
        amb = A - B if AmB is None else AmB
        return np.maximum(amb, 0.0) ** half + (A + B) ** half
    m = int(round(half))
    if abs(half - m) < 1e-15 and m >= 0:
        # (A - B w)^m expands into even moments of w_1 on the sphere
        mom = _even_moments(k, m // 2)
        out = np.zeros(np.broadcast(A, B).shape)
        for i in range(m // 2 + 1):
            out = out + math.comb(m, 2 * i) * mom[i] * A ** (m - 2 * i) * B ** (2 * i)
        return sphere_area(k) * out
    with np.errstate(invalid="ignore", divide="ignore"):
        z = np.where(A > 0, (B / np.where(A > 0, A, 1.0)) ** 2, 0.0)
    z = np.minimum(z, 1.0)
    shape = z.shape
    F = _hyp2f1_unit(-lam / 4, (2 - lam) / 4, (k + 1) / 2, np.atleast_1d(z).ravel()).reshape(shape)
    return sphere_area(k) * A**half * F


def point_kernel(s, rho, h, lam: float, n: int) -> np.ndarray:
    """Zonal integral of ``|x - y|**lam`` over ``|x| = s`` (unit sphere measure) for ``y = (rho e, h)``."""
    s, rho, h = np.asarray(s, float), np.asarray(rho, float), np.asarray(h, float)
    A = s * s + rho * rho + h * h
    B = 2.0 * s * rho
    return zonal(A, B, lam, n - 2, AmB=(s - rho) ** 2 + h * h)


# ---------------------------------------------------------------------------
# half-space profiles
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class HalfSpaceProfile:
    """Nonnegative function ``G(|y'|, y_n)`` on the half space in ``R^n``.

    Either sampled on a ``(rho_grid, h_grid)`` tensor grid (bilinear
    interpolation, zero outside the grid) or given by an exact callable
    ``fn(rho, h)``; ``support`` is then the polar radius beyond which it
    vanishes (``inf`` if it does not) and ``radial_breaks`` lists polar radii
    where it fails to be smooth.
    """

    rho_grid: np.ndarray
    h_grid: np.ndarray
    values: np.ndarray
    n: int
    fn: Callable | None = field(default=None, repr=False)
    support: float = math.inf
    radial_breaks: tuple = ()

    def __post_init__(self):
        r = np.asarray(self.rho_grid, float)
        h = np.asarray(self.h_grid, float)
        v = np.asarray(self.values, float)
        if np.any(np.diff(r) <= 0) or np.any(np.diff(h) <= 0) or r[0] < 0 or h[0] < 0:
            raise ValueError("grids must be nonnegative and strictly increasing")
        if v.shape != (r.size, h.size):
            raise ValueError("values must have shape (len(rho_grid), len(h_grid))")
        if np.any(v < 0):
            raise ValueError("values must be nonnegative")
        if self.n < 2:
            raise ValueError("n must be >= 2")
        object.__setattr__(self, "rho_grid", r)
        object.__setattr__(self, "h_grid", h)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, fn: Callable, n: int, support: float = math.inf, radial_breaks=(), grid: int = 33):
        top = support if np.isfinite(support) else 10.0
        r = np.linspace(0.0, top, grid)
        h = np.linspace(0.0, top, grid)
        with np.errstate(all="ignore"):
            v = np.nan_to_num(np.asarray(fn(r[:, None], h[None, :]), float) * np.ones((grid, grid)))
        return cls(r, h, np.maximum(v, 0.0), n, fn, float(support), tuple(radial_breaks))

    @classmethod
    def half_ball(cls, n: int, radius: float = 1.0, height: float = 1.0) -> "HalfSpaceProfile":
        fn = lambda rho, h: np.where(rho * rho + h * h <= radius * radius, height, 0.0)  # noqa: E731
        return cls.from_function(fn, n, support=radius)

    def __call__(self, rho, h) -> np.ndarray:
        rho = np.asarray(rho, float)
        h = np.asarray(h, float)
        if self.fn is not None:
            out = np.asarray(self.fn(rho, h), float) * np.ones(np.broadcast(rho, h).shape)
            if np.isfinite(self.support):
                out = np.where(rho * rho + h * h <= self.support**2, out, 0.0)
            return out
        r, hh, v = self.rho_grid, self.h_grid, self.values
        i = np.clip(np.searchsorted(r, rho, side="right") - 1, 0, r.size - 2)
        j = np.clip(np.searchsorted(hh, h, side="right") - 1, 0, hh.size - 2)
        tr = np.clip((rho - r[i]) / (r[i + 1] - r[i]), 0.0, 1.0)
        th = np.clip((h - hh[j]) / (hh[j + 1] - hh[j]), 0.0, 1.0)
        out = (
            v[i, j] * (1 - tr) * (1 - th)
            + v[i + 1, j] * tr * (1 - th)
            + v[i, j + 1] * (1 - tr) * th
            + v[i + 1, j + 1] * tr * th
        )
        inside = (rho >= r[0]) & (rho <= r[-1]) & (h >= hh[0]) & (h <= hh[-1])
        return np.where(inside, out, 0.0)

    def bounding_box(self) -> tuple[float, float]:
        if self.fn is not None:
            if not np.isfinite(self.support):
                raise EnvelopeMissing("profile has unbounded support")
            return self.support, self.support
        return float(self.rho_grid[-1]), float(self.h_grid[-1])

    def scaled(self, c: float) -> "HalfSpaceProfile":
        fn = None if self.fn is None else (lambda rho, h, f=self.fn: c * f(rho, h))
        return HalfSpaceProfile(self.rho_grid, self.h_grid, c * self.values, self.n, fn, self.support, self.radial_breaks)


# ---------------------------------------------------------------------------
# quadrature rules
# ---------------------------------------------------------------------------


def _profile_breaks(f: RadialProfile) -> tuple[np.ndarray, float, bool]:
    # sample radii subdivide smooth callables and are the kinks of interpolants
    brk = np.unique(np.concatenate([np.asarray(f.breaks, float), f.radii]))
    pos = brk[brk > 0]
    scale = float(pos[0]) if pos.size else 1.0
    if np.isfinite(f.support):
        return brk, float(f.support), False
    top = max(float(brk[-1]), scale) * 2.0**DECADES
    geo = scale * 2.0 ** np.arange(-8, math.ceil(math.log2(top / scale)))
    return np.unique(np.concatenate([brk, geo, [top]])), top, True


def _tail_rule(top, levels: int = 40, order: int = INNER_ORDER):
    ub = np.concatenate([[0.0], 0.5 ** np.arange(levels, -1, -1)])
    un, uw = panel_rule(ub, order)
    return top / un, top / un**2 * uw


def inner_rule(f: RadialProfile, rho: np.ndarray, h: np.ndarray, order: int = INNER_ORDER, levels: int = GRADE_LEVELS):
    """Per-point radial rules for the extension integral.

    Returns nodes and weights of shape ``(P, M)``; panels follow the
    profile's breakpoints and are graded toward ``s = rho`` over ``levels``
    halvings, never much finer than the height.
    """
    base, top, tail = _profile_breaks(f)
    rho = np.asarray(rho, float).ravel()
    h = np.asarray(h, float).ravel()
    D = np.maximum(rho, base[base > 0][0] if np.any(base > 0) else 1.0)
    d = D[:, None] * 0.5 ** np.arange(levels + 1)
    # panels much finer than the height are wasted; clipping them yields zero-length panels
    d = np.maximum(d, np.minimum(0.25 * h[:, None], D[:, None]))
    graded = np.concatenate([rho[:, None] - d, rho[:, None], rho[:, None] + d], axis=1)
    graded = np.clip(graded, 0.0, top)
    brk = np.sort(np.concatenate([np.broadcast_to(base, (rho.size, base.size)), graded], axis=1), axis=1)
    nodes, weights = panel_rule(brk, order)
    if tail:
        tn, tw = _tail_rule(top, order=order)
        nodes = np.concatenate([nodes, np.broadcast_to(tn, (rho.size, tn.size))], axis=1)
        weights = np.concatenate([weights, np.broadcast_to(tw, (rho.size, tw.size))], axis=1)
    return nodes, weights


def _grading_groups(f: RadialProfile, rho: np.ndarray, h: np.ndarray):
    """Split points by how many graded levels their height requires."""
    base = np.asarray(f.breaks, float)
    pos = base[base > 0]
    D = np.maximum(rho, pos[0] if pos.size else 1.0)
    with np.errstate(divide="ignore"):
        need = np.ceil(np.log2(D / np.maximum(0.25 * h, D * 2.0**-GRADE_LEVELS)))
    need = np.clip(need, 0, GRADE_LEVELS)
    for top in (8, 16, 24, 32, GRADE_LEVELS):
        sel = np.nonzero((need <= top) & (need > top - 8 if top > 8 else need <= top))[0]
        if sel.size:
            yield top, sel


@dataclass(frozen=True)
class HalfSpaceRule:
    """Flattened nodes ``(rho, h)`` and weights for ``int_{R^n_+} G(|y'|, y_n) dy``."""

    rho: np.ndarray
    h: np.ndarray
    weights: np.ndarray

    @property
    def size(self) -> int:
        return self.weights.size


def halfspace_rule(
    n: int,
    *,
    center=None,
    support: float = math.inf,
    breaks=(),
    scale: float = 1.0,
    boundary_levels: int = 12,
    order: int = OUTER_ORDER,
) -> HalfSpaceRule:
    """Polar-panel rule on the half space for radial-in-``y'`` integrands.

    Parameters
    ----------
    center
        Boundary radius (or radii) where the integrand is singular, e.g. the
        kernel ``|y - x|**lam`` with ``|x| = center``, or the edge of the
        support of ``f`` for ``E f``. Panels are graded toward each of them
        in both ``R`` and ``phi``.
    support
        Polar radius beyond which the integrand vanishes.
    breaks
        Extra polar radii where the integrand is not smooth.
    boundary_levels
        Geometric levels of angular refinement toward the boundary
        ``phi = 0``, where fields like ``E f`` lose smoothness in ``h``.
    """
    centers = np.atleast_1d(np.asarray([] if center is None else center, float))
    centers = centers[centers > 0]
    pts = [np.array([0.0]), np.asarray(breaks, float)]
    finite = np.isfinite(support)
    if finite:
        top = float(support)
        pts.append(top * 2.0 ** -np.arange(0, GRADE_LEVELS))
        centers = np.unique(np.append(centers[centers <= top], top))
    else:
        top = scale * 2.0**DECADES
        pts.append(scale * 2.0 ** np.arange(-GRADE_LEVELS, DECADES + 1))
    for c in centers:
        g = c * 0.5 ** np.arange(1, GRADE_LEVELS + 1)
        pts += [np.array([c]), c - g, c + g]
    rb = np.unique(np.clip(np.concatenate(pts), 0.0, top))
    x, w = gauss_legendre(order)
    cells_r, cells_p, cells_w = [], [], []
    for a, b in zip(rb[:-1], rb[1:]):
        levels = boundary_levels
        if centers.size:
            delta = float(np.min(np.maximum(np.maximum(a - centers, centers - b), 0.0)))
            c = float(centers[np.argmin(np.abs(0.5 * (a + b) - centers))])
            need = math.log2(0.5 * math.pi * max(b, c) / max(delta, c * 2.0**-GRADE_LEVELS)) + 2
            levels = int(min(max(levels, math.ceil(need)), GRADE_LEVELS + 6))
        pn, pw = panel_rule(_angle_breaks(levels), order)
        rn = 0.5 * (a + b) + 0.5 * (b - a) * x
        rw = 0.5 * (b - a) * w
        R, P = np.meshgrid(rn, pn, indexing="ij")
        cells_r.append(R.ravel())
        cells_p.append(P.ravel())
        cells_w.append(np.outer(rw, pw).ravel())
    if not finite:
        ub = np.concatenate([[0.0], 0.5 ** np.arange(40, -1, -1)])
        un, uw = panel_rule(ub, order)
        pn, pw = panel_rule(_angle_breaks(boundary_levels), order)
        Rt, Pt = np.meshgrid(top / un, pn, indexing="ij")
        cells_r.append(Rt.ravel())
        cells_p.append(Pt.ravel())
        cells_w.append(np.outer(top / un**2 * uw, pw).ravel())
    R = np.concatenate(cells_r)
    P = np.concatenate(cells_p)
    W = np.concatenate(cells_w)
    rho = R * np.cos(P)
    h = R * np.sin(P)
    jac = sphere_area(n - 2) * rho ** (n - 2) * R if n > 2 else 2.0 * R
    return HalfSpaceRule(rho, h, W * jac)


def _angle_breaks(levels: int) -> np.ndarray:
    return np.unique(np.concatenate([[0.0], 0.5 * math.pi * 0.5 ** np.arange(levels, 0, -1), [0.25 * math.pi, 0.5 * math.pi]]))


def halfspace_rule_for(g: HalfSpaceProfile, center=None, boundary_levels: int = 12) -> HalfSpaceRule:
    if g.fn is not None:
        return halfspace_rule(g.n, center=center, support=g.support, breaks=g.radial_breaks, boundary_levels=boundary_levels)
    return tensor_rule(g, center)


def tensor_rule(g: HalfSpaceProfile, center=None, order: int = OUTER_ORDER) -> HalfSpaceRule:
    """Tensor rule on the sampling grid of ``g``, graded toward each ``(center, 0)``."""
    rb = [g.rho_grid]
    hb = [g.h_grid]
    for c in np.atleast_1d(np.asarray([] if center is None else center, float)):
        gr = max(c, g.rho_grid[-1]) * 0.5 ** np.arange(1, GRADE_LEVELS + 1)
        rb += [np.array([c]), c - gr, c + gr]
        hb.append(g.h_grid[-1] * 0.5 ** np.arange(1, GRADE_LEVELS + 1))
    rb = np.unique(np.clip(np.concatenate(rb), g.rho_grid[0], g.rho_grid[-1]))
    hb = np.unique(np.clip(np.concatenate(hb), g.h_grid[0], g.h_grid[-1]))
    rn, rw = panel_rule(rb, order)
    hn, hw = panel_rule(hb, order)
    R, H = np.meshgrid(rn, hn, indexing="ij")
    W = np.outer(rw, hw)
    jac = sphere_area(g.n - 2) * R ** (g.n - 2) if g.n > 2 else 2.0 * np.ones_like(R)
    return HalfSpaceRule(R.ravel(), H.ravel(), (W * jac).ravel())


# ---------------------------------------------------------------------------
# operators
# ---------------------------------------------------------------------------


def _check_lambda(lam: float) -> None:
    if not lam > 0:
        raise ValueError("lambda must be positive")


def _chunks(total: int, per: int):
    step = max(1, CHUNK // max(per, 1))
    for i in range(0, total, step):
        yield slice(i, min(total, i + step))


def extend(f: RadialProfile, lam: float, rho, h) -> np.ndarray | float:
    """Extension ``E_lam f`` of a radial boundary profile, evaluated at ``(|y'|, y_n)``.

    ``rho`` and ``h`` broadcast against each other; a scalar pair returns a
    float. The profile's ambient boundary dimension fixes ``n = f.dim + 1``.

    Raises
    ------
    NoConvergence
        If the profile's tail is too fat for the lam-moment to be finite.
    """
    _check_lambda(lam)
    n = f.dim + 1
    if f.tail is not None and f.values[-1] > 0 and f.tail <= lam + n - 1:
        raise NoConvergence(f"profile tail r^-{f.tail} has no finite {lam}-moment")
    rho_a, h_a = np.broadcast_arrays(np.asarray(rho, float), np.asarray(h, float))
    if np.any(h_a < 0) or np.any(rho_a < 0):
        raise ValueError("rho and h must be nonnegative")
    r, hh = rho_a.ravel(), h_a.ravel()
    out = np.empty(r.size)
    for levels, idx in _grading_groups(f, r, hh):
        probe = inner_rule(f, r[idx[:1]], hh[idx[:1]], levels=levels)[0].shape[1]
        for sl in _chunks(idx.size, probe):
            sel = idx[sl]
            nodes, weights = inner_rule(f, r[sel], hh[sel], levels=levels)
            fv = f(nodes)
            ker = point_kernel(nodes, r[sel, None], hh[sel, None], lam, n)
            out[sel] = np.sum(weights * fv * nodes ** (n - 2) * ker, axis=1)
    if not np.all(np.isfinite(out)):
        raise NoConvergence("extension produced non-finite values")
    out = out.reshape(rho_a.shape)
    return float(out) if out.ndim == 0 else out


def restrict(g: HalfSpaceProfile, lam: float, rho) -> np.ndarray | float:
    """Restriction ``R_lam g`` at boundary radius ``rho``."""
    _check_lambda(lam)
    rr = np.atleast_1d(np.asarray(rho, float))
    out = np.empty(rr.size)
    for i, c in enumerate(rr):
        rule = halfspace_rule_for(g, center=float(c))
        gv = g(rule.rho, rule.h)
        # the rule's Jacobian already carries |S^{n-2}| rho^{n-2}; divide it back out of the zonal kernel
        ker = point_kernel(rule.rho, c, rule.h, lam, g.n) / (sphere_area(g.n - 2) if g.n > 2 else 2.0)
        out[i] = float(np.sum(rule.weights * gv * ker))
    if not np.all(np.isfinite(out)):
        raise NoConvergence("restriction produced non-finite values")
    return float(out[0]) if np.ndim(rho) == 0 else out.reshape(np.shape(rho))


def pairing_extension_side(f: RadialProfile, g: HalfSpaceProfile, lam: float) -> float:
    """``int_{R^n_+} (E_lam f) g``."""
    kinks = np.asarray(f.breaks, float)
    rule = halfspace_rule_for(g, center=kinks[kinks > 0] if f.radii.size <= 64 else None)
    gv = g(rule.rho, rule.h)
    keep = gv != 0
    if not np.any(keep):
        return 0.0
    ef = extend(f, lam, rule.rho[keep], rule.h[keep])
    return float(np.sum(rule.weights[keep] * gv[keep] * ef))


def pairing_restriction_side(f: RadialProfile, g: HalfSpaceProfile, lam: float) -> float:
    """``int_{boundary} f (R_lam g)``."""
    extra = tuple(g.radial_breaks) + ((g.support,) if np.isfinite(g.support) else ())
    nodes, weights = f.radial_rule(order=INNER_ORDER, grade=False, split=4, extra=extra)
    fv = f(nodes)
    keep = fv != 0
    if not np.any(keep):
        return 0.0
    rg = restrict(g, lam, nodes[keep])
    return float(np.sum(weights[keep] * fv[keep] * rg))


def duality_gap(f: RadialProfile, g: HalfSpaceProfile, lam: float) -> tuple[float, float, float]:
    """Both pairings and their relative difference ``(lhs, rhs, gap)``.

    ``gap`` is 0 when both sides vanish.
    """
    lhs = pairing_extension_side(f, g, lam)
    rhs = pairing_restriction_side(f, g, lam)
    scale = max(abs(lhs), abs(rhs))
    return lhs, rhs, (abs(lhs - rhs) / scale if scale > 0 else 0.0)


# ---------------------------------------------------------------------------
# negative-exponent norms and the pairing functional
# ---------------------------------------------------------------------------


def _power_sum(values: np.ndarray, weights: np.ndarray, q: float) -> float:
    if np.any(~(values > 0)):
        raise NonPositiveField("field must be strictly positive where integrated with a negative exponent")
    return float(np.sum(weights * values**q))


def qnorm(
    field,
    q: float,
    n: int | None = None,
    domain: str = "halfspace",
    support: float = math.inf,
    boundary_levels: int = 12,
) -> float:
    """``(int field**q)**(1/q)`` for ``q < 0``.

    Parameters
    ----------
    field
        A :class:`HalfSpaceProfile`, a :class:`RadialProfile` (boundary
        domain), or a callable ``field(rho, h)`` (half space) /
        ``field(r)`` (boundary) of the tangential radius.
    n
        Dimension of the half space; inferred from profiles.
    support
        Polar radius of the integration region (a ball or half ball).
    """
    if not q < 0:
        raise ValueError("q must be negative")
    if isinstance(field, RadialProfile):
        domain, n = "boundary", field.dim + 1
    elif isinstance(field, HalfSpaceProfile):
        n = field.n
        if field.fn is not None:
            support = min(support, field.support)
    if n is None:
        raise ValueError("n is required for callable fields")
    if domain == "boundary":
        prof = field if isinstance(field, RadialProfile) else None
        if prof is None:
            wrap = RadialProfile.from_function(
                field, n - 1, support=None if not np.isfinite(support) else support, tail=None if np.isfinite(support) else 1.0
            )
            prof = wrap
        nodes, weights = prof.radial_rule()
        if np.isfinite(support):
            keep = nodes <= support
            nodes, weights = nodes[keep], weights[keep]
        vals = np.asarray(field(nodes) if not isinstance(field, RadialProfile) else prof(nodes), float)
        total = _power_sum(vals, weights, q)
    elif domain == "halfspace":
        rule = halfspace_rule(n, support=support, boundary_levels=boundary_levels)
        vals = np.asarray(field(rule.rho, rule.h), float) * np.ones(rule.size)
        total = _power_sum(vals, rule.weights, q)
    else:
        raise ValueError(f"unknown domain {domain!r}")
    if not (np.isfinite(total) and total > 0):
        raise NoConvergence("negative-exponent integral is not finite")
    return total ** (1.0 / q)


def extension_qnorm(f: RadialProfile, lam: float, q: float, boundary_levels: int = 12) -> float:
    """``||E_lam f||_{L^q(R^n_+)}`` for ``q < 0``."""
    return qnorm(lambda rho, h: extend(f, lam, rho, h), q, n=f.dim + 1, boundary_levels=boundary_levels)


def lr_mass(g: HalfSpaceProfile, r: float) -> float:
    """``int_{R^n_+} g**r``."""
    rule = halfspace_rule_for(g)
    gv = g(rule.rho, rule.h)
    return float(np.sum(rule.weights * np.where(gv > 0, gv, 0.0) ** r))


@dataclass(frozen=True)
class QuotientResult:
    I: float
    quotient: float
    stderr: float = 0.0


def functional_quotient(
    f,
    g,
    exps: ExponentSet,
    *,
    f_support: Box | Envelope | None = None,
    g_support: Box | Envelope | None = None,
    seed: int = 0,
    samples: int = 200_000,
) -> QuotientResult:
    """Pairing ``I(f, g)`` and the quotient ``I / (||f||_p ||g||_r)``.

    Radial profiles (:class:`RadialProfile`, :class:`HalfSpaceProfile`) are
    handled by deterministic quadrature. Any other callables ``f(x)`` on
    points of shape ``(m, n-1)`` and ``g(y)`` on ``(m, n)`` go through the
    Monte Carlo oracle; ``f_support``/``g_support`` are then required and
    the norms are estimated from the same envelopes. ``stderr`` is a
    delta-method standard error for the quotient (0 for quadrature).
    """
    if isinstance(f, RadialProfile) and isinstance(g, HalfSpaceProfile):
        fp = lp_mass(f, exps.p)
        gr = lr_mass(g, exps.r)
        if fp == 0 or gr == 0:
            raise ZeroFunction("f and g must be nonzero")
        I = pairing_extension_side(f, g, exps.lam)
        return QuotientResult(I, I / (fp ** (1 / exps.p) * gr ** (1 / exps.r)))
    if f_support is None or g_support is None:
        raise EnvelopeMissing("non-radial inputs need sampling supports for the Monte Carlo path")
    n = exps.n
    pair = monte_carlo_pair_integral(f, g, power_kernel(exps.lam), n, seed, samples, f_support, g_support)
    fm = _mc_mass(f, f_support, exps.p, seed + 1, samples)
    gm = _mc_mass(g, g_support, exps.r, seed + 2, samples)
    if fm.value <= 0 or gm.value <= 0 or pair.value == 0:
        raise ZeroFunction("f and g must be nonzero")
    Q = pair.value / (fm.value ** (1 / exps.p) * gm.value ** (1 / exps.r))
    rel = math.sqrt(
        (pair.error_estimate / pair.value) ** 2
        + (fm.error_estimate / (exps.p * fm.value)) ** 2
        + (gm.error_estimate / (exps.r * gm.value)) ** 2
    )
    return QuotientResult(pair.value, Q, Q * rel)


def _mc_mass(fn, support, p: float, seed: int, samples: int) -> IntegralResult:
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    pts, pdf = support.sample(rng, samples)
    with np.errstate(divide="ignore", invalid="ignore"):
        v = np.where(pdf > 0, np.abs(np.asarray(fn(pts), float)) ** p / pdf, 0.0)
    return IntegralResult(float(v.mean()), float(v.std(ddof=1) / math.sqrt(samples)), samples)


# ---------------------------------------------------------------------------
# non-radial sampled functions and the rearrangement comparison
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CellSamples:
    """Piecewise-constant boundary function on a uniform grid of cubes.

    ``values`` has one axis per boundary coordinate; cell ``i`` is the cube
    with lower corner ``origin + spacing * i``.
    """

    values: np.ndarray
    spacing: float
    origin: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if np.any(v < 0):
            raise ValueError("cell values must be nonnegative")
        if not self.spacing > 0:
            raise ValueError("spacing must be positive")
        o = np.broadcast_to(np.asarray(self.origin, dtype=float), (v.ndim,)).copy()
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "origin", o)

    @property
    def dim(self) -> int:
        return self.values.ndim

    @property
    def cell_measure(self) -> float:
        return self.spacing**self.dim

    def __call__(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        idx = np.floor((x - self.origin) / self.spacing).astype(int)
        inside = np.all((idx >= 0) & (idx < np.array(self.values.shape)), axis=-1)
        idx = np.where(inside[:, None], idx, 0)
        return np.where(inside, self.values[tuple(idx.T)], 0.0)

    def rearranged(self) -> RadialProfile:
        return rearrange(self.values, self.dim, self.cell_measure)

    def quadrature_nodes(self, order: int = 4) -> tuple[np.ndarray, np.ndarray]:
        """Tensor Gauss nodes over every nonzero cell, with weights times the cell value."""
        x, w = gauss_legendre(order)
        x = 0.5 * (x + 1.0) * self.spacing
        w = 0.5 * w * self.spacing
        grids = np.meshgrid(*([x] * self.dim), indexing="ij")
        local = np.stack([g.ravel() for g in grids], axis=-1)
        lw = np.prod(np.meshgrid(*([w] * self.dim), indexing="ij"), axis=0).ravel()
        cells = np.argwhere(self.values > 0)
        corners = self.origin + self.spacing * cells
        nodes = (corners[:, None, :] + local[None, :, :]).reshape(-1, self.dim)
        weights = (self.values[tuple(cells.T)][:, None] * lw[None, :]).ravel()
        return nodes, weights


def extend_cells(f: CellSamples, lam: float, y: np.ndarray, order: int = 4) -> np.ndarray:
    """``E_lam f`` at half-space points ``y`` (shape ``(m, n)``) for a cell-sampled ``f``."""
    _check_lambda(lam)
    y = np.atleast_2d(np.asarray(y, dtype=float))
    nodes, weights = f.quadrature_nodes(order)
    out = np.empty(y.shape[0])
    step = max(1, CHUNK // max(nodes.shape[0], 1))
    for i in range(0, y.shape[0], step):
        yy = y[i : i + step]
        d2 = np.sum((nodes[None, :, :] - yy[:, None, :-1]) ** 2, axis=-1) + yy[:, None, -1] ** 2
        out[i : i + step] = (d2 ** (lam / 2)) @ weights
    return out


def halfspace_envelope(n: int, scale: float = 1.0, decay: float = 1.0) -> Envelope:
    """Heavy-tailed sampling density on ``R^n_+``.

    The polar radius follows a Lomax law with tail index ``decay``; the
    direction is uniform on the upper hemisphere.
    """
    half_area = 0.5 * sphere_area(n - 1)

    def draw(rng, m):
        R = scale * ((1.0 - rng.random(m)) ** (-1.0 / decay) - 1.0)
        d = rng.standard_normal((m, n))
        d[:, -1] = np.abs(d[:, -1])
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        return R[:, None] * d

    def pdf(y):
        R = np.linalg.norm(y, axis=-1)
        pR = decay / scale * (1.0 + R / scale) ** (-1.0 - decay)
        with np.errstate(divide="ignore"):
            return np.where(R > 0, pR / (half_area * R ** (n - 1)), np.inf)

    return Envelope(draw, pdf)


@dataclass(frozen=True)
class RearrangementComparison:
    """``int (E f)**q`` before and after rearrangement, estimated with common samples.

    ``difference = mass_rearranged - mass_original`` should be ``>= 0``.
    """

    mass_original: float
    mass_rearranged: float
    difference: float
    stderr: float

    @property
    def ok(self) -> bool:
        # rounding slack for inputs that are already symmetric decreasing
        return self.difference >= -3.0 * self.stderr - 1e-12 * abs(self.mass_original)


def rearrangement_comparison(f: CellSamples, lam: float, q: float, seed: int = 0, samples: int = 20_000) -> RearrangementComparison:
    """Monte Carlo check that rearranging ``f`` does not decrease ``int (E_lam f)**q`` for ``q < 0``.

    Both integrals use the same half-space sample, so their difference has
    a small standard error.
    """
    if not q < 0:
        raise ValueError("q must be negative")
    n = f.dim + 1
    if not lam * q < -n:
        raise NoConvergence("int (E f)**q diverges unless lam * q < -n")
    star = f.rearranged()
    scale = max(star.support, f.spacing)
    env = halfspace_envelope(n, scale=scale, decay=min(1.0, -lam * q - n))
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    y, pdf = env.sample(rng, samples)
    ef = extend_cells(f, lam, y)
    es = np.asarray(extend(star, lam, np.linalg.norm(y[:, :-1], axis=1), y[:, -1]), float)
    if np.any(~(ef > 0)) or np.any(~(es > 0)):
        raise NonPositiveField("extension vanished at a sample point")
    a = ef**q / pdf
    b = es**q / pdf
    d = b - a
    se = float(d.std(ddof=1) / math.sqrt(samples))
    return RearrangementComparison(float(a.mean()), float(b.mean()), float(d.mean()), se)


# ---------------------------------------------------------------------------
# log-coordinate reduction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ReducedKernel:
    """Kernel of the extension after ``r = e^t`` and the weight ``e^{(n-1)t/p}``.

    ``Z(s, h)`` integrates ``(e^s (1 + h^2) + e^{-s} - 2 w_1)**(lam/2)`` over
    ``S^{n-2}`` (a two-point sum when ``n = 2``) and
    ``L(s, h) = exp((n/q + lam/2) s) Z(s, h)``.
    """

    n: int
    lam: float
    q: float

    @property
    def growth(self) -> float:
        """Exponent ``n/q + lam/2``; it vanishes on the diagonal family."""
        return self.n / self.q + self.lam / 2

    def Z(self, s, h) -> np.ndarray:
        s, h = np.asarray(s, float), np.asarray(h, float)
        es, ems = np.exp(s), np.exp(-s)
        A = es * (1 + h * h) + ems
        # A - 2 = (e^{s/2} - e^{-s/2})^2 + e^s h^2, written without cancellation
        amb = (2 * np.sinh(s / 2)) ** 2 + es * h * h
        return zonal(A, 2.0, self.lam, self.n - 2, AmB=amb)

    def L(self, s, h) -> np.ndarray:
        return np.exp(self.growth * np.asarray(s, float)) * self.Z(s, h)


def reduced_kernel(n: int, exps: ExponentSet) -> ReducedKernel:
    if exps.n != n:
        raise ValueError("dimension does not match the exponent set")
    return ReducedKernel(n, exps.lam, exps.q)


def reduced_extension(F: Callable, support: tuple[float, float], kernel: ReducedKernel, t, h) -> np.ndarray | float:
    """``H(t, h) = int L(t - s, h) F(s) ds`` for ``F`` supported in ``support``.

    Equals ``e^{n t/q} (E_lam f)(e^t, e^t h)`` when ``F(s) = e^{(n-1)s/p} f(e^s)``.
    """
    lo, hi = support
    t_a, h_a = np.broadcast_arrays(np.asarray(t, float), np.asarray(h, float))
    tt, hh = t_a.ravel(), h_a.ravel()
    span = hi - lo
    d = span * 0.5 ** np.arange(GRADE_LEVELS + 1)
    d = np.maximum(d[None, :], np.minimum(0.25 * hh[:, None], span))
    graded = np.clip(np.concatenate([tt[:, None] - d, tt[:, None], tt[:, None] + d], axis=1), lo, hi)
    ends = np.broadcast_to(np.array([lo, hi]), (tt.size, 2))
    brk = np.sort(np.concatenate([graded, ends], axis=1), axis=1)
    nodes, weights = panel_rule(brk, 12)
    vals = kernel.L(tt[:, None] - nodes, hh[:, None]) * np.asarray(F(nodes), float)
    out = np.sum(weights * vals, axis=1).reshape(t_a.shape)
    return float(out) if out.ndim == 0 else out
