"""One-dimensional and zonal integration, plus a seeded Monte Carlo oracle.

Every integral in the package is reduced to nested 1-D quadratures (or to
Monte Carlo) before it reaches this module. Semi-infinite integrals are
mapped to the whole line with ``r = exp(t)``, which turns algebraic tails
into exponential ones.

Two families of tools live here:

* scalar integrators (``integrate_interval``, ``integrate_halfline``,
  ``integrate_line``, the zonal reductions) returning :class:`IntegralResult`;
* vectorised composite Gauss-Legendre helpers (``panel_rule``,
  ``graded_breaks``, ``halfline_rule``) used by the operator code, where the
  same rule is applied to thousands of evaluation points at once.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable, Literal

import numpy as np
from scipy import integrate

from .errors import EnvelopeMissing, NoConvergence

Rule = Literal["adaptive-gauss", "fixed-gauss-legendre", "double-exponential-substitution", "monte-carlo"]

# log-coordinate window for half-line integrals; the band [T, 2T] is
# integrated separately and must be negligible
LOG_WINDOW = 40.0
MC_BLOCK = 1 << 14


@dataclass(frozen=True)
class QuadratureSpec:
    rule: Rule = "adaptive-gauss"
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_subdivisions: int = 200
    seed: int = 0
    samples: int = 200_000

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")

    def with_(self, **kw) -> "QuadratureSpec":
        return replace(self, **kw)


DEFAULT_SPEC = QuadratureSpec()


@dataclass(frozen=True)
class IntegralResult:
    value: float
    error_estimate: float
    evaluations: int

    def __post_init__(self):
        if not self.error_estimate >= 0:
            raise ValueError("error estimate must be nonnegative")

    def __add__(self, other: "IntegralResult") -> "IntegralResult":
        return IntegralResult(
            self.value + other.value,
            self.error_estimate + other.error_estimate,
            self.evaluations + other.evaluations,
        )

    def scaled(self, c: float) -> "IntegralResult":
        return IntegralResult(c * self.value, abs(c) * self.error_estimate, self.evaluations)


def sphere_area(k: int) -> float:
    """Surface measure of the unit sphere S^k in R^(k+1)."""
    return 2.0 * math.pi ** ((k + 1) / 2) / math.gamma((k + 1) / 2)


def ball_volume(k: int) -> float:
    """Lebesgue measure of the unit ball in R^k."""
    return math.pi ** (k / 2) / math.gamma(k / 2 + 1)


# ---------------------------------------------------------------------------
# vectorised composite Gauss-Legendre
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def panel_rule(breaks: np.ndarray, order: int = 10) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes and weights on sorted breakpoints.

    ``breaks`` may carry leading batch axes; the rule is built along the
    last axis. Zero-length panels contribute zero weight.
    """
    breaks = np.asarray(breaks, dtype=float)
    x, w = gauss_legendre(order)
    a = breaks[..., :-1, None]
    b = breaks[..., 1:, None]
    half = 0.5 * (b - a)
    nodes = (a + b) * 0.5 + half * x
    weights = half * w
    shape = breaks.shape[:-1] + (-1,)
    return nodes.reshape(shape), weights.reshape(shape)


def graded_breaks(center, lo: float, hi: float, finest: float, ratio: float = 0.5, levels: int | None = None) -> np.ndarray:
    """Breakpoints in ``[lo, hi]`` refined geometrically toward ``center``.

    ``center`` may be an array; the result then has one row per centre and
    a fixed number of columns (points outside ``[lo, hi]`` are clipped,
    producing harmless zero-length panels).
    """
    center = np.atleast_1d(np.asarray(center, dtype=float))
    span = hi - lo
    if levels is None:
        levels = max(1, int(math.ceil(math.log(finest / span) / math.log(ratio))))
    d = span * ratio ** np.arange(levels + 1)
    pts = np.concatenate([center[:, None] - d, center[:, None], center[:, None] + d], axis=1)
    pts = np.clip(pts, lo, hi)
    ends = np.broadcast_to(np.array([lo, hi]), (center.size, 2))
    return np.sort(np.concatenate([pts, ends], axis=1), axis=1)


def halfline_rule(breaks: np.ndarray, order: int = 10, tail_levels: int = 40) -> tuple[np.ndarray, np.ndarray]:
    """Rule for ``[0, inf)``: panels on ``breaks`` then an inverted tail.

    Beyond ``S = breaks[..., -1]`` the substitution ``s = S / u`` maps the tail
    to ``u in (0, 1]``, integrated on panels graded geometrically toward 0.
    """
    nodes, weights = panel_rule(breaks, order)
    S = np.asarray(breaks, dtype=float)[..., -1:]
    ub = np.concatenate([[0.0], 0.5 ** np.arange(tail_levels, -1, -1)])
    un, uw = panel_rule(ub, order)
    tn = S / un
    tw = S / un**2 * uw
    return np.concatenate([nodes, tn], axis=-1), np.concatenate([weights, tw], axis=-1)


# ---------------------------------------------------------------------------
# scalar integrators
# ---------------------------------------------------------------------------


def _target(spec: QuadratureSpec, value: float) -> float:
    return max(spec.abs_tol, spec.rel_tol * abs(value))


def _quad(f, a, b, spec: QuadratureSpec, points=None, weight=None, wvar=None) -> IntegralResult:
    kw = dict(epsabs=spec.abs_tol, epsrel=spec.rel_tol, limit=spec.max_subdivisions, full_output=1)
    if points is not None and weight is None:
        pts = [p for p in points if a < p < b]
        if pts:
            kw["points"] = pts
    if weight is not None:
        kw.update(weight=weight, wvar=wvar)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        out = integrate.quad(f, a, b, **kw)
    value, err, info = out[0], out[1], out[2]
    ier = 0
    if len(out) > 3:
        ier = 1 if "limit" in str(out[3]).lower() else 2
        if "diverg" in str(out[3]).lower():
            ier = 5
    if not np.isfinite(value) or not np.isfinite(err):
        raise NoConvergence("integrand produced a non-finite value")
    if ier == 5 or (ier and err > 100 * _target(spec, value)):
        raise NoConvergence(f"adaptive quadrature stopped with error {err:.3e} on [{a}, {b}]")
    return IntegralResult(float(value), float(err), int(info["neval"]))


def _fixed_gl(f, a, b, spec: QuadratureSpec, points=None) -> IntegralResult:
    brk = [a] + sorted(p for p in (points or ()) if a < p < b) + [b]
    n_panels = max(1, spec.max_subdivisions // max(1, len(brk) - 1))
    fine = np.concatenate([np.linspace(brk[i], brk[i + 1], n_panels + 1)[:-1] for i in range(len(brk) - 1)] + [[b]])
    # geometric refinement toward both ends absorbs endpoint singularities
    width = (b - a) / (len(fine) - 1)
    ends = width * 0.5 ** np.arange(1, 40)
    fine = np.unique(np.concatenate([fine, a + ends, b - ends]))
    x20, w20 = panel_rule(fine, 20)
    x10, w10 = panel_rule(fine, 10)
    hi = float(np.sum(w20 * f(x20)))
    lo = float(np.sum(w10 * f(x10)))
    if not np.isfinite(hi):
        raise NoConvergence("integrand produced a non-finite value")
    return IntegralResult(hi, abs(hi - lo), x20.size + x10.size)


def _tanh_sinh(f, a, b, spec: QuadratureSpec) -> IntegralResult:
    c, d = 0.5 * (a + b), 0.5 * (b - a)
    h, prev, evals = 1.0, None, 0
    for _ in range(12):
        k = np.arange(-int(6.0 / h), int(6.0 / h) + 1) * h
        u = 0.5 * math.pi * np.sinh(k)
        x = np.tanh(u)
        w = 0.5 * math.pi * np.cosh(k) / np.cosh(u) ** 2
        keep = (np.abs(x) < 1.0) & (w > 1e-300)
        with np.errstate(all="ignore"):
            vals = f(c + d * x[keep])
        est = float(d * h * np.sum(w[keep] * vals))
        evals += int(keep.sum())
        if prev is not None and abs(est - prev) <= _target(spec, est):
            return IntegralResult(est, abs(est - prev), evals)
        prev, h = est, h / 2
    raise NoConvergence("double-exponential rule did not settle")


def _mc_interval(f, a, b, spec: QuadratureSpec) -> IntegralResult:
    rng = np.random.default_rng(spec.seed)
    x = rng.uniform(a, b, spec.samples)
    v = (b - a) * f(x)
    return IntegralResult(float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size)), v.size)


def _vec(f):
    """Lift a scalar integrand to arrays when the rule needs it."""

    def g(x):
        x = np.asarray(x, dtype=float)
        try:
            out = np.asarray(f(x), dtype=float)
            if out.shape == x.shape:
                return out
        except (TypeError, ValueError):
            pass
        return np.array([f(float(t)) for t in x.ravel()], dtype=float).reshape(x.shape)

    return g


def integrate_interval(
    f: Callable,
    a: float,
    b: float,
    spec: QuadratureSpec = DEFAULT_SPEC,
    points=None,
    weight: str | None = None,
    wvar=None,
) -> IntegralResult:
    """Integrate ``f`` over a finite interval with the rule named in ``spec``.

    ``weight``/``wvar`` follow :func:`scipy.integrate.quad` (e.g. ``"alg"``
    for endpoint algebraic singularities) and are honoured by every rule.
    """
    if weight is not None and spec.rule != "adaptive-gauss":
        alpha, beta = wvar if weight == "alg" else (0.0, 0.0)
        base = f
        f = lambda x, base=base: base(x) * (x - a) ** alpha * (b - x) ** beta  # noqa: E731
        weight = None
    if spec.rule == "adaptive-gauss":
        return _quad(f, a, b, spec, points, weight, wvar)
    g = _vec(f)
    if spec.rule == "fixed-gauss-legendre":
        return _fixed_gl(g, a, b, spec, points)
    if spec.rule == "double-exponential-substitution":
        return _tanh_sinh(g, a, b, spec)
    if spec.rule == "monte-carlo":
        return _mc_interval(g, a, b, spec)
    raise ValueError(f"unknown rule {spec.rule!r}")


def integrate_halfline(f: Callable, spec: QuadratureSpec = DEFAULT_SPEC, scale: float = 1.0) -> IntegralResult:
    """``int_0^inf f(r) dr`` through the substitution ``r = scale * exp(t)``.

    The window ``|t| <= 40`` carries the integral; the bands ``40 < |t| <= 80``
    are integrated as a convergence check and must be negligible, otherwise
    :class:`NoConvergence` is raised (non-integrable or mis-declared tail).
    """
    if spec.rule == "double-exponential-substitution":
        return _exp_sinh(f, spec, scale)
    if spec.rule == "monte-carlo":
        return _mc_halfline(f, spec, scale)

    def g(t):
        r = scale * np.exp(t)
        with np.errstate(over="ignore", invalid="ignore"):
            val = f(r) * r
        return np.where(np.isfinite(val), val, np.inf) if isinstance(val, np.ndarray) else val

    T = LOG_WINDOW
    g_scalar = g if spec.rule == "adaptive-gauss" else _vec(g)
    pts = list(np.arange(-T + 5, T, 5.0))
    main = integrate_interval(g_scalar, -T, T, spec.with_(max_subdivisions=max(spec.max_subdivisions, 4 * len(pts))), points=pts)
    tails = []
    for lo, hi in ((T, 2 * T), (-2 * T, -T)):
        try:
            tails.append(integrate_interval(g_scalar, lo, hi, spec, points=list(np.arange(lo + 5, hi, 5.0))))
        except NoConvergence as exc:
            raise NoConvergence("integrand does not decay at the ends of the half line") from exc
    tail = tails[0] + tails[1]
    total = main + tail
    if abs(tail.value) > max(10 * _target(spec, total.value), 1e-8 * abs(total.value)):
        raise NoConvergence(f"tail contribution {tail.value:.3e} is not negligible; integrand decays too slowly")
    return total


def _exp_sinh(f, spec: QuadratureSpec, scale: float) -> IntegralResult:
    g = _vec(f)
    h, prev, evals = 0.5, None, 0
    for _ in range(12):
        k = np.arange(-int(4.5 / h), int(4.5 / h) + 1) * h
        u = 0.5 * math.pi * np.sinh(k)
        keep = np.abs(u) < 700
        r = scale * np.exp(u[keep])
        w = scale * np.exp(u[keep]) * 0.5 * math.pi * np.cosh(k[keep])
        with np.errstate(all="ignore"):
            vals = g(r) * w
        vals = np.where(np.isfinite(vals), vals, np.inf)
        est = float(h * np.sum(vals))
        evals += r.size
        if not np.isfinite(est):
            raise NoConvergence("integrand does not decay at the ends of the half line")
        if prev is not None and abs(est - prev) <= _target(spec, est):
            return IntegralResult(est, abs(est - prev), evals)
        prev, h = est, h / 2
    raise NoConvergence("double-exponential rule did not settle")


def _mc_halfline(f, spec: QuadratureSpec, scale: float) -> IntegralResult:
    # Cauchy proposal in t = log(r / scale) gives heavy enough tails for algebraic decay
    rng = np.random.default_rng(spec.seed)
    t = 8.0 * np.tan(math.pi * (rng.random(spec.samples) - 0.5))
    pdf = 1.0 / (math.pi * 8.0 * (1 + (t / 8.0) ** 2))
    r = scale * np.exp(np.clip(t, -700, 700))
    with np.errstate(all="ignore"):
        v = _vec(f)(r) * r / pdf
        mean, err = float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size))
    if not (np.isfinite(mean) and np.isfinite(err)):
        raise NoConvergence("Monte Carlo estimate is not finite; integrand decays too slowly")
    return IntegralResult(mean, err, v.size)


def integrate_line(f: Callable, spec: QuadratureSpec = DEFAULT_SPEC, scale: float = 1.0) -> IntegralResult:
    """``int_R f(x) dx`` as the half-line integral of ``f(x) + f(-x)``."""
    return integrate_halfline(lambda r: f(r) + f(-r), spec, scale)


# ---------------------------------------------------------------------------
# zonal reductions
# ---------------------------------------------------------------------------


def integrate_sphere_zonal(
    g: Callable, k: int, spec: QuadratureSpec = DEFAULT_SPEC, normalized: bool = False, points=None
) -> IntegralResult:
    """``int_{S^k} g(w . e) dw`` for a function of one cosine.

    ``k = 0`` is the two-point sum ``g(1) + g(-1)``; ``k = 1`` is integrated in
    the angle; ``k >= 2`` uses the weight ``(1 - t^2)^((k-2)/2)``.
    ``normalized=True`` divides by ``|S^k|``.
    """
    if k < 0:
        raise ValueError("sphere dimension must be >= 0")
    if k == 0:
        res = IntegralResult(float(g(1.0) + g(-1.0)), 0.0, 2)
    elif k == 1:
        # symmetric in the angle, so integrate over [0, pi] and double
        res = integrate_interval(lambda phi: g(np.cos(phi)), 0.0, math.pi, spec, points=points).scaled(2.0)
    else:
        beta = (k - 2) / 2
        res = integrate_interval(g, -1.0, 1.0, spec, points=points, weight="alg", wvar=(beta, beta)).scaled(
            sphere_area(k - 1)
        )
    return res.scaled(1.0 / sphere_area(k)) if normalized else res


def integrate_hemisphere_zonal(g: Callable, n: int, spec: QuadratureSpec = DEFAULT_SPEC, points=None) -> IntegralResult:
    """``int_{S^n_+} g(xi_{n+1}) dxi`` over the upper hemisphere of S^n."""
    beta = (n - 2) / 2
    if beta == 0:
        res = integrate_interval(g, 0.0, 1.0, spec, points=points)
    else:
        res = integrate_interval(
            lambda t: g(t) * (1.0 + t) ** beta, 0.0, 1.0, spec, points=points, weight="alg", wvar=(0.0, beta)
        )
    return res.scaled(sphere_area(n - 1))


# ---------------------------------------------------------------------------
# Monte Carlo pairing oracle
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Box:
    """Axis-aligned compact support ``[lo, hi]``; sampled uniformly."""

    lo: tuple
    hi: tuple

    def sample(self, rng: np.random.Generator, m: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = np.asarray(self.lo, float), np.asarray(self.hi, float)
        pts = lo + (hi - lo) * rng.random((m, lo.size))
        return pts, np.full(m, 1.0 / float(np.prod(hi - lo)))


@dataclass(frozen=True)
class Envelope:
    """Importance-sampling envelope: ``draw(rng, m) -> points`` with density ``pdf``."""

    draw: Callable
    pdf: Callable

    def sample(self, rng: np.random.Generator, m: int) -> tuple[np.ndarray, np.ndarray]:
        pts = np.asarray(self.draw(rng, m), dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        return pts, np.asarray(self.pdf(pts), dtype=float)


def power_kernel(lam: float) -> Callable:
    def k(x, y):
        xx = np.concatenate([x, np.zeros((x.shape[0], 1))], axis=1) if x.shape[1] < y.shape[1] else x
        return np.linalg.norm(xx - y, axis=1) ** lam

    return k


def _block_sums(f, g, kernel, f_support, g_support, seed, start, count):
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(start,)))
    xs, px = f_support.sample(rng, count)
    ys, py = g_support.sample(rng, count)
    with np.errstate(divide="ignore", invalid="ignore"):
        v = np.asarray(f(xs), float) * np.asarray(kernel(xs, ys), float) * np.asarray(g(ys), float) / (px * py)
    v = np.where(px * py > 0, v, 0.0)
    return float(v.sum()), float((v * v).sum())


def monte_carlo_pair_integral(
    f: Callable,
    g: Callable,
    kernel: Callable,
    n: int,
    seed: int,
    samples: int,
    f_support: Box | Envelope | None = None,
    g_support: Box | Envelope | None = None,
    workers: int = 1,
) -> IntegralResult:
    """Unbiased estimate of ``int int f(x) kernel(x, y) g(y) dx dy``.

    ``x`` ranges over the boundary R^(n-1) and ``y`` over the half space
    R^n_+; points are arrays of shape ``(m, n-1)`` and ``(m, n)``. Samples
    are drawn in fixed blocks, each from its own substream of ``seed``,
    and summed in block order, so the result is bit-identical for any
    ``workers``.
    """
    if samples <= 0:
        raise EnvelopeMissing("at least one sample is required")
    if f_support is None or g_support is None:
        raise EnvelopeMissing("both functions need a compact support box or a sampling envelope")
    blocks = [(i, min(MC_BLOCK, samples - i * MC_BLOCK)) for i in range(math.ceil(samples / MC_BLOCK))]
    job = lambda b: _block_sums(f, g, kernel, f_support, g_support, seed, b[0], b[1])  # noqa: E731
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(job, blocks))
    else:
        parts = [job(b) for b in blocks]
    s1 = math.fsum(p[0] for p in parts)
    s2 = math.fsum(p[1] for p in parts)
    mean = s1 / samples
    var = max(s2 / samples - mean * mean, 0.0) * samples / max(samples - 1, 1)
    return IntegralResult(mean, math.sqrt(var / samples), 2 * samples)
