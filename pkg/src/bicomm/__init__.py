"""Numerical laboratory for bi-parameter commutators of singular integrals."""
from . import commutator, czo, dyadic, factorization, grid, paraproducts, spaces
from .errors import BicommError

__version__ = "0.1.0"

__all__ = ["commutator", "czo", "dyadic", "factorization", "grid", "paraproducts", "spaces",
           "BicommError", "__version__"]
