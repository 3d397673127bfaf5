"""Nested inclusion and functional dependency discovery for JSON collections."""

__version__ = "1.0.0"
