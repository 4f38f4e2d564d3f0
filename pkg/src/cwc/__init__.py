"""Compressive wave computation in one dimension."""
__version__ = "0.1.0"
