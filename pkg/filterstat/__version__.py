"""Version information for filterstat."""

__version__ = "0.1.0"
