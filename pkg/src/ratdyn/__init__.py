"""Computational experiments with rational self-maps of complex projective space."""

__version__ = "0.1.0"
