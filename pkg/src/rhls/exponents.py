"""Exponent bookkeeping for the reversed HLS inequality on the half space.

All exponents are derived from the single source of truth ``(n, lam, p)``.
The constant C+ is keyed by ``(n, lam, p)``; the alternative key
``(n, alpha, p)`` with ``alpha = lam + n`` names the same object.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DegenerateExponent, OutOfRange

RELATION_TOL = 1e-12


@dataclass(frozen=True)
class ExponentSet:
    n: int
    lam: float
    alpha: float
    p: float
    r: float
    q: float
    kappa: float
    theta: float
    beta: float
    gamma: float

    def relation_residuals(self) -> dict[str, float]:
        """Residuals of every exact relation the tuple must satisfy."""
        n, lam, p, r, q = self.n, self.lam, self.p, self.r, self.q
        return {
            "balance": ((n - 1) / n) / p + 1 / r - lam / n - (2 - 1 / n),
            "q_from_p": 1 / q - (((n - 1) / n) * (1 / p - 1) - lam / n),
            "q_from_r": 1 / q - (1 - 1 / r),
            "dual_q": (n / (n - 1)) * (1 / r - 1) - lam / (n - 1) - (1 - 1 / p),
            "alpha": self.alpha - (lam + n),
            "kappa": self.kappa * (1 - r) - 1,
            "theta": self.theta * (1 - p) - 1,
        }

    def check(self, tol: float = RELATION_TOL) -> None:
        for name, res in self.relation_residuals().items():
            if abs(res) > tol:
                raise OutOfRange(f"relation {name!r} violated by {res:.3e}")
        if not (self.kappa > 1 and self.theta > 1 and self.q < 0):
            raise OutOfRange("need kappa > 1, theta > 1 and q < 0")

    @property
    def q_dual(self) -> float:
        """Exponent of the restriction-side form, ``1/q = 1 - 1/p``."""
        return self.p / (self.p - 1)


def from_lambda_p(n: int, lam: float, p: float) -> ExponentSet:
    """Solve the balance condition for ``r`` and populate every exponent.

    Raises
    ------
    OutOfRange
        If ``n < 2``, ``lam <= 0``, ``p`` is outside (0, 1), or the solved
        ``r`` is outside (0, 1).
    """
    if int(n) != n or n < 2:
        raise OutOfRange(f"dimension must be an integer >= 2, got {n}")
    n = int(n)
    if not lam > 0:
        raise OutOfRange(f"lambda must be positive, got {lam}")
    if not 0 < p < 1:
        raise OutOfRange(f"p must lie in (0, 1), got {p}")
    inv_r = 2 - 1 / n + lam / n - ((n - 1) / n) / p
    if inv_r <= 1:
        raise OutOfRange(f"solved r = {1 / inv_r if inv_r else float('inf')} is not in (0, 1)")
    r = 1 / inv_r
    inv_q = ((n - 1) / n) * (1 / p - 1) - lam / n
    if inv_q >= 0:
        raise OutOfRange("q is not negative")
    exps = ExponentSet(
        n=n,
        lam=float(lam),
        alpha=float(lam) + n,
        p=float(p),
        r=r,
        q=1 / inv_q,
        kappa=1 / (1 - r),
        theta=1 / (1 - p),
        beta=n * p / ((n - 1) * r),
        gamma=1 + lam / (n - 1),
    )
    exps.check()
    return exps


def diagonal_family(n: int, lam: float) -> tuple[float, float]:
    """The ``(p, r)`` pair admitting explicit extremals."""
    return 2 * (n - 1) / (2 * (n - 1) + lam), 2 * n / (2 * n + lam)


def diagonal(n: int, lam: float) -> ExponentSet:
    p, _ = diagonal_family(n, lam)
    return from_lambda_p(n, lam, p)


def classification_exponents(n: int, lam: float) -> tuple[float, float]:
    """``(kappa, theta)`` forced on solutions of the integral system."""
    return 1 + 2 * n / lam, 1 + (2 * n - 2) / lam


@dataclass(frozen=True)
class NecessaryCondition:
    residual: float
    sign_kappa: float
    sign_theta: float


def necessary_condition_residual(n: int, lam: float, kappa: float, theta: float) -> NecessaryCondition:
    """LHS minus RHS of the critical condition linking ``kappa`` and ``theta``.

    Also returns ``2n - kappa*lam + lam`` and ``2n - 2 - theta*lam + lam``,
    the quantities whose vanishing makes the Kelvin-transformed pair solve
    the same system.
    """
    if kappa <= 1 or theta <= 1:
        raise DegenerateExponent(f"need kappa > 1 and theta > 1, got {kappa}, {theta}")
    residual = ((n - 1) / n) / (theta - 1) + 1 / (kappa - 1) - lam / n
    return NecessaryCondition(
        residual=residual,
        sign_kappa=2 * n - kappa * lam + lam,
        sign_theta=2 * n - 2 - theta * lam + lam,
    )
