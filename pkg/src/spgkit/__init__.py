"""Subset partition graphs: layer families, property checkers and constructions."""

__version__ = "0.1.0"
