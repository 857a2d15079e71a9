"""Context-sensitive permission mediation engine and simulated runtime."""

__version__ = "0.1.0"
