"""Version information for chiral-circulator."""

__version__ = "0.1.0"
