"""Numerical laboratory for boundary frequency functions and vanishing-order bounds
of elliptic equations in C^{1,Dini} domains (planar numerics)."""

from .errors import DomainError, NumericalError, HypothesisViolation

__version__ = "0.1.0"

__all__ = ["DomainError", "NumericalError", "HypothesisViolation", "__version__"]
