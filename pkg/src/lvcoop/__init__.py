"""Simulation and verification toolkit for cooperative Lotka-Volterra reaction-diffusion systems."""

__version__ = "0.1.0"
