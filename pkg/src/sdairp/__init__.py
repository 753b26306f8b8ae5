"""Stochastic dynamic arc-inventory routing."""

__version__ = "0.1.0"
