"""Simulation toolkit for a controlled-ISI direct-detection optical link."""

__version__ = "0.1.0"
