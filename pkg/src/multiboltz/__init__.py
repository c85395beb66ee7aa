"""Multi-species Boltzmann toolkit: collision kinematics, the linearized
operator and its spectrum, Povzner constants, the Carleman kernel form,
the A + B splitting and a relaxation solver."""
from .discretization import SphereQuadrature, VelocityGrid
from .kernel import KernelSpec
from .mixture import SpeciesSet

__version__ = "0.1.0"
__all__ = ["KernelSpec", "SpeciesSet", "SphereQuadrature", "VelocityGrid"]
