"""Seeded turn-based blue/red cyber-defense simulator."""

__version__ = "0.1.0"
