"""Exact and statistical experiments on random +-1 matrices."""

__version__ = "0.1.0"
