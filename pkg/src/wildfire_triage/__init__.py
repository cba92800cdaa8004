"""Multimodal wildfire social-media triage pipeline."""

__version__ = "0.1.0"
