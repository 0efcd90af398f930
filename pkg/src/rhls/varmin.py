"""Discretised variational problem for the sharp constant.

Minimise ``||E_lam f||_q`` over nonnegative, nonincreasing radial ``f``
with ``||f||_p = 1``. Profiles are piecewise linear in ``r`` on a
logarithmic grid ``0, r_1, ..., r_N = r_max`` and continue past ``r_max``
with the power decay ``r**-(2n - 2 + lam)`` of the extremals. Because
``E_lam`` is linear, the field on a fixed half-space rule is ``K @ f`` for
a precomputed matrix ``K``; objective and gradient are then exact for the
discrete problem.

The iteration is a projected, preconditioned gradient method in ``log f``:
monotonicity is restored by pool-adjacent-violators after each step and
the ``p``-constraint by exact rescaling (both sides are 1-homogeneous, so
the ratio ``||E f||_q / ||f||_p`` is what is actually minimised).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.special import gammaln

from .errors import OutOfRange, Stalled
from .exponents import ExponentSet, diagonal
from .operators import HalfSpaceProfile, extend, halfspace_rule, point_kernel
from .quadrature import panel_rule, sphere_area
from .radial import RadialProfile

Init = Literal["extremal-seed", "flat", "random"]


@dataclass(frozen=True)
class MinimizeOptions:
    """Settings of :func:`minimize_profile`.

    ``init`` is ``"extremal-seed"``, ``"flat"`` or ``"random"`` (then
    ``seed`` is used). ``tol`` bounds the projected preconditioned gradient
    in ``log f``; ``step`` is the first trial step of the Armijo search.
    """

    grid_size: int = 128
    r_max: float = 1e3
    r_min: float = 1e-3
    init: Init = "extremal-seed"
    seed: int = 0
    max_iters: int = 3000
    step: float = 1.0
    tol: float = 1e-3
    boundary_levels: int = 8

    def __post_init__(self):
        if self.grid_size < 16:
            raise ValueError("grid_size must be >= 16")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if not 0 < self.r_min < self.r_max:
            raise ValueError("need 0 < r_min < r_max")
        if self.init not in ("extremal-seed", "flat", "random"):
            raise ValueError(f"unknown init {self.init!r}")


@dataclass(frozen=True)
class IterationTrace:
    objective: np.ndarray
    stationarity: np.ndarray
    steps: np.ndarray

    @property
    def iterations(self) -> int:
        return int(self.objective.size - 1)

    def is_monotone(self, slack: float = 1e-13) -> bool:
        return bool(np.all(np.diff(self.objective) <= slack * self.objective[:-1]))


@dataclass(frozen=True)
class MinimizeResult:
    profile: RadialProfile
    constant: float
    trace: IterationTrace
    stationarity: float

    def __iter__(self):
        # allows ``profile, constant, trace = minimize_profile(...)``
        return iter((self.profile, self.constant, self.trace))


# ---------------------------------------------------------------------------
# discretisation
# ---------------------------------------------------------------------------


def tail_exponent(n: int, lam: float) -> float:
    return 2 * n - 2 + lam


def radial_grid(opts: MinimizeOptions) -> np.ndarray:
    return np.concatenate([[0.0], np.geomspace(opts.r_min, opts.r_max, opts.grid_size - 1)])


def _hat_basis(grid: np.ndarray, s: np.ndarray, tail: float) -> np.ndarray:
    """Values at ``s`` of the piecewise-linear hats on ``grid``, the last one with a power tail."""
    N = grid.size
    phi = np.zeros((s.size, N))
    idx = np.clip(np.searchsorted(grid, s, side="right") - 1, 0, N - 2)
    inside = s <= grid[-1]
    t = (s - grid[idx]) / (grid[idx + 1] - grid[idx])
    rows = np.nonzero(inside)[0]
    phi[rows, idx[rows]] = 1.0 - t[rows]
    phi[rows, idx[rows] + 1] = t[rows]
    out = ~inside
    phi[out, -1] = (s[out] / grid[-1]) ** (-tail)
    return phi


@dataclass(frozen=True)
class Discretization:
    """Everything :func:`minimize_profile` needs about one ``(n, lam, p, grid)``.

    ``K`` maps node values to ``E f`` at the half-space nodes with weights
    ``w``; ``B`` maps node values to ``f`` at radial nodes with weights
    ``mass_w`` (Jacobian included).
    """

    exps: ExponentSet
    grid: np.ndarray
    tail: float
    K: np.ndarray
    w: np.ndarray
    B: np.ndarray
    mass_w: np.ndarray = field(repr=False)

    def field_(self, f: np.ndarray) -> np.ndarray:
        return self.K @ f

    def p_mass(self, f: np.ndarray) -> float:
        return float(np.sum(self.mass_w * np.maximum(self.B @ f, 0.0) ** self.exps.p))

    def objective(self, f: np.ndarray) -> float:
        """``||E f||_q / ||f||_p``; equals ``||E f||_q`` on the constraint."""
        q, p = self.exps.q, self.exps.p
        S = float(np.sum(self.w * self.field_(f) ** q))
        return S ** (1 / q) / self.p_mass(f) ** (1 / p)

    def gradient(self, f: np.ndarray) -> tuple[float, np.ndarray]:
        """Objective and its gradient with respect to the node values."""
        q, p = self.exps.q, self.exps.p
        Ef = self.field_(f)
        S = float(np.sum(self.w * Ef**q))
        J = S ** (1 / q)
        dJ = S ** (1 / q - 1) * (self.K.T @ (self.w * Ef ** (q - 1)))
        bf = np.maximum(self.B @ f, 0.0)
        M = float(np.sum(self.mass_w * bf**p))
        with np.errstate(divide="ignore", invalid="ignore"):
            dM = p * (self.B.T @ np.where(bf > 0, self.mass_w * bf ** (p - 1), 0.0))
        norm = M ** (1 / p)
        dnorm = norm / (p * M) * dM
        Q = J / norm
        return Q, (dJ - Q * dnorm) / norm

    def mass_shares(self, f: np.ndarray) -> np.ndarray:
        """Fraction of the ``p``-mass carried by each hat (preconditioner)."""
        p = self.exps.p
        bf = np.maximum(self.B @ f, 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            d = f * (self.B.T @ np.where(bf > 0, self.mass_w * bf ** (p - 1), 0.0))
        return d / max(float(np.sum(self.mass_w * bf**p)), 1e-300)

    def profile(self, f: np.ndarray) -> RadialProfile:
        grid, tail = self.grid, self.tail
        fv = np.asarray(f, float).copy()

        def fn(r):
            r = np.asarray(r, float)
            flat = r.ravel()
            return (_hat_basis(grid, flat, tail) @ fv).reshape(r.shape)

        return RadialProfile(grid, fv, self.exps.n - 1, monotone=True, tail=tail, fn=fn, knots=tuple(grid[1:]))


def discretize(exps: ExponentSet, opts: MinimizeOptions = MinimizeOptions()) -> Discretization:
    """Assemble the extension matrix and the mass rule for ``exps`` on the grid of ``opts``."""
    n, lam = exps.n, exps.lam
    grid = radial_grid(opts)
    tail = tail_exponent(n, lam)
    # radial rule for the inner integral: panels between grid nodes plus an inverted tail
    s_in, w_in = panel_rule(grid, 8)
    ub = np.concatenate([[0.0], 0.5 ** np.arange(40, -1, -1)])
    un, uw = panel_rule(ub, 8)
    s = np.concatenate([s_in, grid[-1] / un])
    ws = np.concatenate([w_in, grid[-1] / un**2 * uw])
    B = _hat_basis(grid, s, tail)
    mass_w = ws * sphere_area(n - 2) * s ** (n - 2)
    rule = halfspace_rule(n, boundary_levels=opts.boundary_levels)
    K = np.empty((rule.size, grid.size))
    sw = (ws * s ** (n - 2))[:, None] * B
    step = max(1, 2_000_000 // s.size)
    for i in range(0, rule.size, step):
        sl = slice(i, i + step)
        ker = point_kernel(s[None, :], rule.rho[sl, None], rule.h[sl, None], lam, n)
        K[sl] = ker @ sw
    return Discretization(exps, grid, tail, K, rule.weights, B, mass_w)


# ---------------------------------------------------------------------------
# projections
# ---------------------------------------------------------------------------


def pav_nonincreasing(y: np.ndarray, w: np.ndarray | None = None) -> np.ndarray:
    """Weighted least-squares projection onto nonincreasing sequences (pool adjacent violators)."""
    y = np.asarray(y, float)
    w = np.ones_like(y) if w is None else np.asarray(w, float)
    vals, wts, counts = [], [], []
    for yi, wi in zip(y, w):
        vals.append(yi)
        wts.append(wi)
        counts.append(1)
        while len(vals) > 1 and vals[-2] < vals[-1]:
            v2, w2, c2 = vals.pop(), wts.pop(), counts.pop()
            wsum = wts[-1] + w2
            vals[-1] = (vals[-1] * wts[-1] + v2 * w2) / wsum
            wts[-1] = wsum
            counts[-1] += c2
    return np.repeat(vals, counts)


def _normalize(d: Discretization, f: np.ndarray) -> np.ndarray:
    return f / d.p_mass(f) ** (1 / d.exps.p)


# ---------------------------------------------------------------------------
# initial profiles
# ---------------------------------------------------------------------------


def _initial(opts: MinimizeOptions, exps: ExponentSet, grid: np.ndarray) -> np.ndarray:
    n, lam = exps.n, exps.lam
    if opts.init == "extremal-seed":
        return (1 + grid**2) ** (1 - n - lam / 2)
    tail = tail_exponent(n, lam)
    if opts.init == "flat":
        return np.where(grid <= 1.0, 1.0, np.maximum(grid, 1.0) ** (-tail))
    rng = np.random.default_rng(opts.seed)
    width = math.exp(rng.uniform(math.log(0.3), math.log(3.0)))
    power = rng.uniform(0.5, 1.5) * tail
    base = (1 + (grid / width) ** 2) ** (-power / 2)
    jitter = np.exp(-np.cumsum(rng.uniform(0.0, 0.05, grid.size)))
    f = base * jitter
    # match the fixed tail beyond r_max continuously
    return np.maximum(f, 1e-300)


# ---------------------------------------------------------------------------
# minimisation
# ---------------------------------------------------------------------------


def _step(x: np.ndarray, direction: np.ndarray, t: float, metric: np.ndarray) -> np.ndarray:
    # projecting in the metric of the preconditioner keeps the projected arc a descent path
    return pav_nonincreasing(x + t * direction, metric)


def _direction(d: Discretization, f: np.ndarray, Q: float, grad: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Preconditioned descent direction in ``log f`` and the metric it lives in.

    The gradient in ``log f`` (relative to the objective) is divided by each
    hat's share of the ``p``-mass.
    """
    g_log = f * grad / Q
    shares = d.mass_shares(f)
    metric = np.maximum(shares, 1e-3 * shares.max())
    return -g_log / metric, metric


def stationarity(d: Discretization, f: np.ndarray) -> float:
    """Mass-weighted RMS of the projected preconditioned step in ``log f`` (0 at a constrained critical point)."""
    Q, grad = d.gradient(f)
    x = np.log(f)
    direction, metric = _direction(d, f, Q, grad)
    return _stat_norm(_step(x, direction, 1.0, metric) - x, metric)


def _stat_norm(dx: np.ndarray, metric: np.ndarray) -> float:
    # RMS of the log step weighted by mass share; nodes carrying no mass cannot dominate
    return float(math.sqrt(np.sum(metric * dx**2) / np.sum(metric)))


def minimize_profile(exps: ExponentSet, opts: MinimizeOptions = MinimizeOptions(),
                     discretization: Discretization | None = None) -> MinimizeResult:
    """Minimise ``||E_lam f||_q`` over nonincreasing radial ``f`` with ``||f||_p = 1``.

    Raises
    ------
    OutOfRange
        If ``q`` is not negative.
    Stalled
        If the stationarity tolerance is not reached within ``max_iters``
        iterations, or the line search finds no descent before it is.
    """
    if not exps.q < 0:
        raise OutOfRange("the variational problem needs q < 0")
    d = discretize(exps, opts) if discretization is None else discretization
    f = _normalize(d, pav_exp(_initial(opts, exps, d.grid)))
    x = np.log(f)
    Q, grad = d.gradient(f)
    objective, stat_trace, steps = [Q], [], []
    t = opts.step
    for _ in range(opts.max_iters):
        direction, metric = _direction(d, f, Q, grad)
        stat = _stat_norm(_step(x, direction, 1.0, metric) - x, metric)
        stat_trace.append(stat)
        if stat <= opts.tol:
            break
        t = min(opts.step, 2.0 * t)
        accepted = False
        while t > 1e-12:
            x_new = _step(x, direction, t, metric)
            f_new = _normalize(d, np.exp(x_new))
            Q_new = d.objective(f_new)
            # Armijo condition along the projected arc
            if Q_new <= Q - 1e-4 * Q * float(np.sum(metric * (x_new - x) ** 2)) / t:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            raise Stalled(f"no descent from objective {Q:.12g} at stationarity {stat:.3g}")
        f = f_new
        x = np.log(f)
        Q, grad = d.gradient(f)
        objective.append(Q)
        steps.append(t)
    else:
        stat = stationarity(d, f)
        stat_trace.append(stat)
        if stat > opts.tol:
            raise Stalled(f"stationarity {stat:.3g} above tol after {opts.max_iters} iterations")
    trace = IterationTrace(np.array(objective), np.array(stat_trace), np.array(steps))
    return MinimizeResult(d.profile(f), Q, trace, stat_trace[-1])


def pav_exp(f: np.ndarray) -> np.ndarray:
    """Monotone (nonincreasing) version of a positive profile, projected in ``log f``."""
    return np.exp(pav_nonincreasing(np.log(np.asarray(f, float))))


# ---------------------------------------------------------------------------
# references and checks
# ---------------------------------------------------------------------------


def extremal_reference(n: int, lam: float) -> RadialProfile:
    """``(1 + r**2)**(1 - n - lam/2)`` normalised to unit ``p``-mass for the diagonal exponent."""
    exps = diagonal(n, lam)
    # its p-th power is (1 + r^2)^(1 - n), whose integral over R^{n-1} is a Beta value
    log_mass = 0.5 * (n - 1) * math.log(math.pi) + gammaln(0.5 * (n - 1)) - gammaln(n - 1.0)
    c = math.exp(-log_mass / exps.p)
    power = 1 - n - lam / 2
    fn = lambda r: c * (1 + np.asarray(r, float) ** 2) ** power  # noqa: E731
    return RadialProfile.from_function(fn, n - 1, tail=-2 * power, monotone=True)


def induced_partner(f: RadialProfile, exps: ExponentSet) -> HalfSpaceProfile:
    """``g = (E f)**(q - 1)``, the half-space function that makes the quotient equal ``||E f||_q / ||f||_p``."""
    lam, q = exps.lam, exps.q
    return HalfSpaceProfile.from_function(lambda rho, h: extend(f, lam, rho, h) ** (q - 1), exps.n, grid=3)


def gradient_check(d: Discretization, f: np.ndarray, step: float = 1e-5, indices=None) -> float:
    """Max relative gap between the analytic gradient and central differences in the node values."""
    _, grad = d.gradient(f)
    idx = range(f.size) if indices is None else indices
    worst = 0.0
    scale = float(np.max(np.abs(grad)))
    for i in idx:
        e = np.zeros_like(f)
        e[i] = step * max(abs(f[i]), 1e-12)
        fd = (d.objective(f + e) - d.objective(f - e)) / (2 * e[i])
        worst = max(worst, abs(fd - grad[i]) / scale)
    return worst


def fit_extremal_shape(profile: RadialProfile, n: int, lam: float, r_fit: float = 30.0) -> tuple[float, float, float]:
    """Least-squares fit of ``c (1 + (r/s)**2)**(1 - n - lam/2)`` in log values on ``r <= r_fit``.

    Returns ``(c, s, max relative deviation)`` over the fitted nodes.
    """
    from scipy.optimize import least_squares

    r = profile.radii[profile.radii <= r_fit]
    v = profile.values[profile.radii <= r_fit]
    power = 1 - n - lam / 2

    def resid(z):
        return z[0] + power * np.log1p((r / math.exp(z[1])) ** 2) - np.log(v)

    sol = least_squares(resid, x0=[math.log(v[0]), 0.0])
    c, s = math.exp(sol.x[0]), math.exp(sol.x[1])
    model = c * (1 + (r / s) ** 2) ** power
    return c, s, float(np.max(np.abs(v / model - 1)))
