"""Numerical building blocks: special functions, geometry, expansions."""
