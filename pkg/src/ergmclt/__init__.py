"""Ferromagnetic ERGM simulation and CLT verification toolkit."""

__version__ = "0.1.0"
