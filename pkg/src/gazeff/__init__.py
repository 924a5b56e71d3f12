"""Gaze-driven semantic fast-forward for first-person videos."""

__version__ = "0.1.0"
