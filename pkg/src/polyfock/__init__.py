"""Truncated polyanalytic Fock space models."""

__version__ = "0.1.0"
