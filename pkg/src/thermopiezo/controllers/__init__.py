"""Boundary feedback laws and positive-real certificates."""
