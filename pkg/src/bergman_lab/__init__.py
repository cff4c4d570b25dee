"""Numerical laboratory for weighted Bergman-type spaces on the sphere in stereographic coordinates."""

__version__ = "0.1.0"
