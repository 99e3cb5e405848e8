"""Measurement-driven preparation of the AKLT spin-chain ground state."""

__version__ = "0.1.0"
