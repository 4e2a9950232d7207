"""Quasi-Monte Carlo pricing of arithmetic Asian basket options with
linear-transformation path construction."""

__version__ = "0.1.0"
