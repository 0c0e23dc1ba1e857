"""Quarter-plane conservation-law toolkit.

Approximate solvers (viscous, Lax-Friedrichs-type, Godunov), boundary-layer
profiles, and admissible boundary-value sets for one-dimensional hyperbolic
conservation laws posed on x > 0 with Dirichlet boundary data.
"""

from quarterplane.systems import make_model  # noqa: F401

__version__ = "0.1.0"
