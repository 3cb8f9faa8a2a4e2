"""Surface-integral electrostatics for planar multilayer superconducting layouts.

Capacitance matrices and interface energy participation ratios from a
Galerkin method of moments on conductor surfaces, with a tabulated layered
Green's function and conformal-mapping reference solutions.
"""
from ._accel import get_backend, set_backend, set_threads
from .errors import ConfigError, ConvergenceError, NumericalError, SurfEprError, TableRangeError
from .stackup import DielectricLayer, Stackup

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "ConvergenceError", "DielectricLayer", "NumericalError", "Stackup", "SurfEprError",
    "TableRangeError", "get_backend", "set_backend", "set_threads", "__version__",
]
