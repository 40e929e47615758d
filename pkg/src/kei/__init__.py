"""Kidney exchange clearing with a budget of immunosuppressants."""

__version__ = "0.1.0"
