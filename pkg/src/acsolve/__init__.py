"""Variable-step BDF2 stabilized exponential-SAV solvers for the Allen-Cahn equation."""
from .grid import GridSpec
from .kernels import RatioPolicy
from .potential import ConfigError, Potential
from .scheme import SchemeConfig, SchemeState, VARIANTS
from .stabilizer import AuxFunctional
from .timegrid import AdaptiveParams, TimeGrid
from .trajectory import Trajectory, run_adaptive, run_fixed

__version__ = "0.1.0"

__all__ = [
    "AdaptiveParams",
    "AuxFunctional",
    "ConfigError",
    "GridSpec",
    "Potential",
    "RatioPolicy",
    "SchemeConfig",
    "SchemeState",
    "TimeGrid",
    "Trajectory",
    "VARIANTS",
    "run_adaptive",
    "run_fixed",
]
