"""Exact-arithmetic laboratory for Bilocal Classical Theory."""

__version__ = "0.1.0"
