"""Exact and interval-certified tools for continued-fraction cylinders, digit sets,
critical exponents and digit-insertion constructions."""

__version__ = "0.1.0"
