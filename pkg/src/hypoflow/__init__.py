"""Hypo SU(2)-structures on 5-dimensional nilpotent Lie algebras and their evolution."""
__version__ = "0.1.0"
