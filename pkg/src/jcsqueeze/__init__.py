"""Pulse-train control of transient field squeezing in the Jaynes-Cummings model."""

__version__ = "0.1.0"
