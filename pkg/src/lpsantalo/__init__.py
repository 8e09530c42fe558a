"""Numerical asymmetric Blaschke-Santaló inequalities for functions and bodies."""

__version__ = "0.1.0"
