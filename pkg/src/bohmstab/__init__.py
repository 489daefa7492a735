"""bohmstab: pilot-wave stability toolkit.

Solves the time-dependent Schrodinger equation, extracts the Bohm quantum
potential and guidance trajectories, checks the stability identities of the
polar (Madelung) form as numerical residuals, runs classical tangent-flow
stability diagnostics, and simulates Kramers escape / stochastic resonance
in a driven double well.
"""

__version__ = "0.1.0"

from .constants import PhysicalConstants
from .grids import SpatialGrid, ScalarField, ComplexField, build_grid
from .potentials import PotentialSpec, sample_potential

__all__ = [
    "PhysicalConstants",
    "SpatialGrid",
    "ScalarField",
    "ComplexField",
    "build_grid",
    "PotentialSpec",
    "sample_potential",
    "__version__",
]
