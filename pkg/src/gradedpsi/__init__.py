"""Pseudo-differential calculus on the Euclidean and Heisenberg groups."""

from .kernels import IMPLEMENTATION

__version__ = "0.1.0"

__all__ = ["IMPLEMENTATION", "__version__"]
