"""Composite waves with periodic far-field perturbations for 1-D compressible Navier-Stokes."""

__version__ = "0.1.0"
