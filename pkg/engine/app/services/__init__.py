"""Theorem engine and numerical oracles."""
