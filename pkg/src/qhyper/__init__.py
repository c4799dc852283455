"""Numerical verification lab for hypercontractivity on twisted finite Fock models."""

__version__ = "0.1.0"

from .signs import ModelParams, SignTable  # noqa: F401
