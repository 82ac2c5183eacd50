"""Semiclassical spectral localization for non-self-adjoint operators."""

__version__ = "0.1.0"
