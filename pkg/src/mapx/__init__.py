"""Reliability-weighted ensemble scoring of social media documents with tiered explanations."""

__version__ = "0.1.0"
