"""Verified Koopman spectral computations from snapshot data.

Residual-based eigenpair cleanup, pseudospectra, filtered and rational-kernel
spectral measures, and a kernel-learned dictionary pipeline.
"""
from .errors import ArgumentError, DomainError, KoopspecError, NumericError, ResourceError
from . import (dictionary, dynamics, galerkin, io, kernelized, measure_filter, measure_rational,
               observables, quadrature)

__version__ = "0.1.0"

__all__ = [
    "ArgumentError", "DomainError", "KoopspecError", "NumericError", "ResourceError",
    "dictionary", "dynamics", "galerkin", "io", "kernelized", "measure_filter",
    "measure_rational", "observables", "quadrature", "__version__",
]
