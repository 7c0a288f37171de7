"""Relative radial mass of radial-gauge metrics against warped-product backgrounds."""

__version__ = "0.1.0"
