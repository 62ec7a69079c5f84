"""Absorptive arrival-time dynamics and energy-time uncertainty checks."""

__version__ = "0.1.0"
