"""Exact sparse homogeneous polynomial algebra over the Gaussian rationals."""

from .gaussian import GaussianRational
from .homopoly import HomoPoly, default_variables
from .parser import parse
from .algorithms import gcd, gcd_many, resultant, resultant_binary, sylvester_matrix


def evaluate(p, z):
    return p.evaluate(z)


def differentiate(p, var_index):
    return p.differentiate(var_index)


def render(p, variables=None):
    return p.render(variables)


__all__ = [
    "GaussianRational", "HomoPoly", "default_variables", "parse", "render",
    "evaluate", "differentiate", "gcd", "gcd_many", "resultant",
    "resultant_binary", "sylvester_matrix",
]
