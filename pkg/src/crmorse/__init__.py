"""Numerical checks of Morse inequalities and Szego kernel bounds on CR manifolds with circle action."""
from .kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
