"""Prescribed-angle curves and torse-forming vector fields on model spaces."""

__version__ = "0.1.0"
