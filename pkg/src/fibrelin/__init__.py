"""Feedback linearisation, Ehresmann connections and zero dynamics for SISO affine systems."""

__version__ = "0.1.0"
