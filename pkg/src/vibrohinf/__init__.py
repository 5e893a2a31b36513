"""Averaged H-infinity Riccati analysis for plants under high-frequency vibration."""

__version__ = "0.1.0"
