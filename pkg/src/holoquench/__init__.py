"""Topological quench dynamics in a synthetic frequency dimension."""

__version__ = "0.1.0"
