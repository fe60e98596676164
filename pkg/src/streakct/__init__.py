"""Simulation and prediction of streak artifacts from non-convex metal regions."""

__version__ = "0.1.0"
