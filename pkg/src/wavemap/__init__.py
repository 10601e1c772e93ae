"""Numerical laboratory for adiabatic collapse of 2+1 equivariant wave maps."""
__version__ = "0.1.0"
