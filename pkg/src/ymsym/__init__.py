"""Symmetry analysis toolkit for the Yang-Mills equations on Minkowski space."""

__version__ = "0.1.0"
