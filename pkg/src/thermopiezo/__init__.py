"""Simulation and stability certification for thermo-piezoelectric beam transmission problems."""

__version__ = "0.1.0"
