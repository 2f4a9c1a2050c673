"""Numerical laboratory for the viscous Hilbert-Burgers equation with a Coriolis term."""

__version__ = "0.1.0"
