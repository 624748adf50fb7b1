"""Nonlinear demixing of block-sparse components."""

__version__ = "0.1.0"
