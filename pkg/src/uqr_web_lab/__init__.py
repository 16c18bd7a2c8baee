"""Numerical toolkit for quasiregular dynamics at desk scale."""

__version__ = "0.1.0"
