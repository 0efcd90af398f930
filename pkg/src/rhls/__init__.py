"""Numerics for the sharp reversed Hardy-Littlewood-Sobolev inequality on the half space.

Submodules
----------
exponents   exponent bookkeeping and the classification exponents
geometry    Kelvin inversions, moving-sphere kernels, stereographic lift
quadrature  one-dimensional, zonal and Monte Carlo integration
radial      radial profiles, rearrangement, layer-cake masses
operators   extension/restriction, pairings, negative norms, reduced kernel
constants   sharp constants and the log-HLS limit
system      the Euler-Lagrange integral system and its classified solutions
varmin      discretised variational problem
cli         command-line driver
"""

from .constants import c_explicit_lambda2, c_n_log, c_spherical
from .errors import RHLSError
from .exponents import ExponentSet, diagonal, from_lambda_p
from .operators import HalfSpaceProfile, extend, restrict
from .radial import RadialProfile, rearrange

__all__ = [
    "ExponentSet",
    "HalfSpaceProfile",
    "RHLSError",
    "RadialProfile",
    "c_explicit_lambda2",
    "c_n_log",
    "c_spherical",
    "diagonal",
    "extend",
    "from_lambda_p",
    "rearrange",
    "restrict",
]
