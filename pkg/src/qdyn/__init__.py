"""Numerical checks of linearity, signalling and complete positivity for quantum dynamics."""

__version__ = "0.1.0"
