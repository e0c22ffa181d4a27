"""Two-phase Stokes/Navier-Stokes droplet flow on a fixed reference disk.

A dispersed phase occupying a near-circular region inside a rigid disk is
separated from the continuous phase by a sharp interface with surface
tension.  The moving interface is written as a normal height field over a
fixed reference circle and the bulk equations are pulled back to the fixed
two-phase polar grid, so that all unknowns live on time-independent domains.

Subpackages:

``geometry``     reference disk/circle, tubular neighbourhood, interface map
``surface``      spectral calculus on the reference circle (normals, curvature)
``fields``       two-phase polar grids, derivative matrices, bulk fields
``transform``    pullback operators entering the fixed-domain equations
``transmission`` two-phase elliptic transmission solvers
``stokes``       linearized two-phase Stokes operator, spectrum, stationary solver
``evolution``    semi-implicit time integration and diagnostics
``equilibria``   ball fitting, tangent-ball monitor, convergence-rate tools
"""

from .geometry import Geometry, AmbientPoint, signed_distance, cutoff_chi, hanzawa_map, hanzawa_jacobian
from .surface import HeightField

__version__ = "0.1.0"

__all__ = [
    "Geometry",
    "AmbientPoint",
    "HeightField",
    "signed_distance",
    "cutoff_chi",
    "hanzawa_map",
    "hanzawa_jacobian",
    "__version__",
]
