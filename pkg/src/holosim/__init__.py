"""Simulation toolkit for time-optimal holonomic gates on parametrically
driven transmon pairs."""

__version__ = "0.1.0"
