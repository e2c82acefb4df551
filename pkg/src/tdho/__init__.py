"""Dynamical invariants of the driven time-dependent harmonic oscillator."""

__version__ = "0.1.0"
