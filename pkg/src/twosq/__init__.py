"""Exponential sums, Voronoi summation and Diophantine approximation by sums of two squares."""

__version__ = "0.1.0"
