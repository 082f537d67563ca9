"""Area-dependent two-dimensional field theories evaluated by state sums."""

__version__ = "0.1.0"
