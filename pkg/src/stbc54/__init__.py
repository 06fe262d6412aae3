"""Simulation and verification toolkit for a rate-5/4 low-complexity
decodable 4x4 space-time block code with non-vanishing determinants."""
from ._jit import USE_NUMBA
from .codes import CodeDef, cod34, default_phi, make_code, new_code_matrix

__all__ = ["USE_NUMBA", "CodeDef", "cod34", "default_phi", "make_code", "new_code_matrix"]
__version__ = "0.1.0"
