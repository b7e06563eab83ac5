"""Numerical null-controllability workbench."""
__version__ = "0.1.0"
