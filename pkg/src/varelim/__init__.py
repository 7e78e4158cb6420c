"""Variable elimination for separable optimization."""

__version__ = "0.1.0"
