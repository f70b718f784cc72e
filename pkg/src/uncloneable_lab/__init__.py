"""Numerical laboratory for Clifford-keyed uncloneable bit encryption."""

__version__ = "0.1.0"
