"""Measure how easily each document of a collection can be found."""

__version__ = "1.0.0"
