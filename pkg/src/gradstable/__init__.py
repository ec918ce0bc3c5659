"""Topological criteria for the stable set of a polynomial gradient flow at a critical point."""

__version__ = "0.1.0"
