"""Random test pairs ``(f, g)`` for property runs of the reversed inequality.

Each function is a positive combination of one to three compactly
supported bumps ``c (1 - |x - x0|**2 / R**2)_+**alpha`` with
``alpha in {0, 1, 2}`` (``alpha = 0`` is an indicator), so neither is
radial in general and both come with an exact bounding box for sampling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exponents import ExponentSet
from .operators import QuotientResult, functional_quotient
from .quadrature import Box


@dataclass(frozen=True)
class BumpSum:
    centers: np.ndarray
    radii: np.ndarray
    heights: np.ndarray
    powers: np.ndarray

    def __call__(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.zeros(x.shape[0])
        for c, R, a, k in zip(self.centers, self.radii, self.heights, self.powers):
            t = np.maximum(1.0 - np.sum((x - c) ** 2, axis=1) / R**2, 0.0)
            out += a * np.where(t > 0, t**k, 0.0)
        return out

    def box(self, halfspace: bool = False) -> Box:
        lo = np.min(self.centers - self.radii[:, None], axis=0)
        hi = np.max(self.centers + self.radii[:, None], axis=0)
        if halfspace:
            lo[-1] = 0.0
        return Box(tuple(lo), tuple(hi))


def random_bumps(rng: np.random.Generator, dim: int, halfspace: bool = False) -> BumpSum:
    """One to three bumps in ``R^dim``; with ``halfspace`` their centres have positive last coordinate."""
    k = int(rng.integers(1, 4))
    centers = rng.uniform(-2.0, 2.0, (k, dim))
    if halfspace:
        centers[:, -1] = rng.uniform(0.0, 2.0, k)
    radii = rng.uniform(0.3, 2.0, k)
    heights = rng.uniform(0.2, 2.0, k)
    powers = rng.integers(0, 3, k).astype(float)
    return BumpSum(centers, radii, heights, powers)


@dataclass(frozen=True)
class TrialOutcome:
    index: int
    quotient: float
    stderr: float


def run_trial(exps: ExponentSet, seed: int, index: int, samples: int = 200_000) -> TrialOutcome:
    """Quotient of one random pair; the pair and the Monte Carlo stream derive from ``seed ^ index``."""
    task_seed = seed ^ index
    rng = np.random.default_rng(np.random.SeedSequence(task_seed))
    f = random_bumps(rng, exps.n - 1)
    g = random_bumps(rng, exps.n, halfspace=True)
    res: QuotientResult = functional_quotient(
        f, g, exps, f_support=f.box(), g_support=g.box(halfspace=True), seed=task_seed, samples=samples
    )
    return TrialOutcome(index, res.quotient, res.stderr)
