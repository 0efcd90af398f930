"""Points, sphere inversions centred on the boundary, and the stereographic lift.

Points are plain numpy arrays. A boundary point of the half space in
dimension ``n`` has ``n - 1`` coordinates; a half-space point has ``n``
coordinates with the height last. Functions that accept "a point" work
on either, and broadcast over leading axes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PoleImage, SingularPoint


@dataclass(frozen=True)
class BoundaryPoint:
    coords: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=float)
        if not np.all(np.isfinite(c)):
            raise ValueError("boundary point must have finite coordinates")
        object.__setattr__(self, "coords", c)

    def lift(self) -> np.ndarray:
        """The same point as an element of the closed half space."""
        return np.append(self.coords, 0.0)


@dataclass(frozen=True)
class HalfSpacePoint:
    tangential: np.ndarray
    height: float

    def __post_init__(self):
        if self.height < 0:
            raise ValueError("height must be nonnegative")
        object.__setattr__(self, "tangential", np.asarray(self.tangential, dtype=float))

    @property
    def coords(self) -> np.ndarray:
        return np.append(self.tangential, self.height)


@dataclass(frozen=True)
class SpherePoint:
    coords: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=float)
        if abs(np.linalg.norm(c) - 1.0) > 1e-12:
            raise ValueError("sphere point must have unit norm")
        object.__setattr__(self, "coords", c)


def _as_center(x, dim: int) -> np.ndarray:
    x = np.asarray(getattr(x, "coords", x), dtype=float)
    if x.shape[-1] == dim - 1:
        x = np.append(x, 0.0)
    return x


def kelvin(x, nu: float, xi) -> tuple[np.ndarray, np.ndarray]:
    """Invert ``xi`` in the sphere of radius ``nu`` centred at the boundary point ``x``.

    Returns the image ``x + nu**2 (xi - x) / |xi - x|**2`` and the measure
    factor ``(nu / |xi - x|)**(2d)`` where ``d`` is the dimension of the
    ambient space of ``xi`` (``2n`` for half-space points, ``2n - 2`` for
    boundary points).
    """
    xi = np.asarray(getattr(xi, "coords", xi), dtype=float)
    c = np.asarray(getattr(x, "coords", x), dtype=float)
    if c.shape[-1] != xi.shape[-1]:
        c = _as_center(c, xi.shape[-1])
    d = xi - c
    dist2 = np.sum(d * d, axis=-1, keepdims=True)
    if np.any(dist2 == 0):
        raise SingularPoint("Kelvin transform is undefined at its centre")
    image = c + nu**2 * d / dist2
    factor = (nu**2 / dist2[..., 0]) ** xi.shape[-1]
    return image, factor


def ms_reflect(w, x, nu: float, lam: float):
    """Return ``xi -> (|xi - x| / nu)**lam * w(xi^{x,nu})``.

    ``w`` must accept arrays of points with the coordinate axis last.
    """
    c = np.asarray(getattr(x, "coords", x), dtype=float)

    def reflected(xi):
        xi = np.asarray(getattr(xi, "coords", xi), dtype=float)
        cc = c if c.shape[-1] == xi.shape[-1] else _as_center(c, xi.shape[-1])
        image, _ = kelvin(cc, nu, xi)
        dist = np.linalg.norm(xi - cc, axis=-1)
        return (dist / nu) ** lam * w(image)

    return reflected


def ms_kernel(x, nu: float, zeta, z, lam: float):
    """Moving-sphere difference kernel ``k(x, nu; zeta, z)``.

    Positive whenever both ``|zeta - x| > nu`` and ``|z - x| > nu``.
    """
    zeta = np.asarray(getattr(zeta, "coords", zeta), dtype=float)
    z = np.asarray(getattr(z, "coords", z), dtype=float)
    dim = max(zeta.shape[-1], z.shape[-1])
    if zeta.shape[-1] < dim:
        zeta = np.concatenate([zeta, np.zeros(zeta.shape[:-1] + (dim - zeta.shape[-1],))], axis=-1)
    if z.shape[-1] < dim:
        z = np.concatenate([z, np.zeros(z.shape[:-1] + (dim - z.shape[-1],))], axis=-1)
    c = _as_center(np.asarray(getattr(x, "coords", x), dtype=float), dim)
    image, _ = kelvin(c, nu, zeta)
    ratio = np.linalg.norm(zeta - c, axis=-1) / nu
    return ratio**lam * np.linalg.norm(image - z, axis=-1) ** lam - np.linalg.norm(zeta - z, axis=-1) ** lam


def critical_radius(x, center, b: float) -> float:
    """Radius ``sqrt(b**2 + |x - center|**2)`` at which the classified solution is inversion invariant."""
    x = np.asarray(getattr(x, "coords", x), dtype=float)
    center = np.asarray(getattr(center, "coords", center), dtype=float)
    return float(np.sqrt(b * b + np.sum((x - center) ** 2)))


def stereo(x) -> np.ndarray:
    """Stereographic map from R^n to S^n.

    The ``(1 - |x|^2)/(1 + |x|^2)`` component sits in slot ``n`` and the
    height ``2 x_n / (1 + |x|^2)`` in slot ``n + 1``, so the upper half
    space goes to the upper hemisphere and its boundary to the equator.
    """
    x = np.asarray(x, dtype=float)
    s = 1.0 + np.sum(x * x, axis=-1, keepdims=True)
    head = 2.0 * x[..., :-1] / s
    mid = (2.0 - s) / s
    tail = 2.0 * x[..., -1:] / s
    return np.concatenate([head, mid, tail], axis=-1)


def stereo_inv(xi) -> np.ndarray:
    """Inverse of :func:`stereo`; the point with slot ``n`` equal to -1 has no preimage."""
    xi = np.asarray(getattr(xi, "coords", xi), dtype=float)
    denom = 1.0 + xi[..., -2:-1]
    if np.any(denom <= 1e-15):
        raise PoleImage("the point (0, ..., 0, -1, 0) is not in the image of the stereographic map")
    return np.concatenate([xi[..., :-2], xi[..., -1:]], axis=-1) / denom


def jacobian(x) -> np.ndarray:
    """Volume factor ``(2 / (1 + |x|^2))**d`` of the stereographic map.

    ``d = n`` on R^n and ``d = n - 1`` on the boundary hyperplane, where
    ``x`` has ``n - 1`` coordinates.
    """
    x = np.asarray(x, dtype=float)
    d = x.shape[-1]
    return (2.0 / (1.0 + np.sum(x * x, axis=-1))) ** d
