"""Skyrmion textures in density matrices of partially coherent light."""

__version__ = "0.1.0"
