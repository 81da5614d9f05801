"""Geometric-probability survivability analysis for networks exposed to bounded disaster areas."""

__version__ = "0.1.0"
