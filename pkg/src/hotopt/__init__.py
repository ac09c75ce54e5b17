"""Hotspot-driven source optimizer for a small C subset."""

__version__ = "0.1.0"
