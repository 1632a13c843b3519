"""Pseudospectral classical density functional theory in two dimensions."""

__version__ = "0.1.0"
