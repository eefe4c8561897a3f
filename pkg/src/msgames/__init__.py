"""Multi-structural and Ehrenfeucht-Fraisse game laboratory."""

__version__ = "0.1.0"
