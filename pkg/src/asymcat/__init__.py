"""Catalytic amplification of asymmetry under translationally invariant operations."""

__version__ = "0.1.0"
