"""Rosenblatt process simulation and fractal dimension estimators."""

__version__ = "0.1.0"
