"""Numerical laboratory for Weyl laws and integration formulas of spectral triples."""

__version__ = "0.1.0"
