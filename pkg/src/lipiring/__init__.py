"""Spatially distributed coevolutionary GAN training on grids and rings."""

__version__ = "0.1.0"
