"""Korn inequalities for incompatible tensor fields, checked with edge elements.

The pieces, bottom up:

``tensor3``     pointwise 3x3 algebra (anti/axl, Nye's formula, ...)
``mesh``        Kuhn-subdivided boxes and an L-shaped prism
``fespace``     P1 vector fields and row-wise Nedelec matrix fields
``forms``       mass, sym-mass, curl-curl, H^-1 Riesz maps, p-functionals
``linalg``      PCG, banded Cholesky, shift-invert block Krylov eigensolver
``korn``        discrete Korn constants and related estimates
``solvers``     p-CurlCurl and the coupled (u, P) energy
``cli``         command-line driver
"""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .mesh import Mesh, Region, build_box_mesh, build_lshape_mesh  # noqa: F401
from .fespace import (EdgeMatrixSpace, FieldDofs, LagrangeSpace, apply_tangential_bc,  # noqa: F401
                      interpolate, interpolate_gradient)
from .korn import (KornEstimate, SkewShift, check_lemma_basic, korn_constant_p2,  # noqa: F401
                   korn_ratio_maximize_p, necas_spot_check, optimal_skew_shift,
                   verify_inequality_sample)
from .solvers import solve_micromorphic, solve_pcurlcurl, solve_plasticity_static  # noqa: F401
