"""Steady two-layer internal bores: conjugate states, long-wave fronts, height-function solver and continuation."""

__version__ = "0.1.0"
