"""Sliding-window informative CCA and its static and streaming relatives."""

__version__ = "0.1.0"
