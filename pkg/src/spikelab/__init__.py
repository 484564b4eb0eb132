"""Spiked sample covariance matrices: laws, simulation, verification and inference."""

__version__ = "0.1.0"
