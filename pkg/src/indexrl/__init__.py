"""Learned index selection with structured (permutation) action spaces."""

__version__ = "0.1.0"
