"""Numerical toolkit for convex integration of the compressible Euler equations."""

from convint.eos import GammaLaw

__all__ = ["GammaLaw"]
__version__ = "0.1.0"
