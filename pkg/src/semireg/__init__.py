"""Exact computations for Lie pairs, Atiyah classes and their semiregularity maps."""

__version__ = "0.1.0"
