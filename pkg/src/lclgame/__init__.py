"""Distributed LCL algorithms as extensive-form games."""

__version__ = "0.1.0"
