"""Holmes-Thompson areas, Santaló points and their property checks."""

__version__ = "0.3.0"
