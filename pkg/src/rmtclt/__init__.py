"""Fluctuations of Chebyshev linear statistics of correlated Hermitian random matrices."""

__version__ = "0.1.0"
