"""Exact and numerical mathematics of the martingale model."""
