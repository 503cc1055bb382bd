"""Numerical comparison geometry on constant-curvature model spaces."""

__version__ = "0.1.0"
