"""Bounds, exact values and simulation for the spectral exit-time functional
G_{p,d}(D) = lambda_1(D)^p sup_x E_x[tau_D^p]."""

__version__ = "0.1.0"
