"""Monotonically fair neural network classifiers."""

__version__ = "0.1.0"
