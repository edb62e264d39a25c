"""Spectral Dirac operators on flat tori, sharp spinorial constants and subcritical solvers."""
__version__ = "0.1.0"
