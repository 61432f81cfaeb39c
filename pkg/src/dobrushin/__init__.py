"""Dobrushin curves, f-divergence contraction and information decay for additive-noise channels."""

__version__ = "0.1.0"
