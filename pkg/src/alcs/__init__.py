"""Pseudo-spectral simulator and verification lab for active nematic
Q-tensor hydrodynamics on a periodic 2D box."""

__version__ = "0.1.0"

from .tensor_algebra import ModelParams, QTensor

__all__ = ["ModelParams", "QTensor", "__version__"]
