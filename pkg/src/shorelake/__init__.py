"""Lake dynamics over a depth profile vanishing at the shore.

Submodules: geometry (domain, depth, grid, collar chart), elliptic (the
degenerate weighted stream-function solve), kernels (half-space model
kernels and their verification harness), hardy (1-D power-weighted
operators and the boundary normal-form ODE), transport (vanishing-viscosity
vorticity evolution), diagnostics (Holder/gradient-constant/uniqueness
reports), cli (the `shorelake` executable).
"""

__version__ = "0.1.0"

from ._core import backend_name

__all__ = ["backend_name", "__version__"]
