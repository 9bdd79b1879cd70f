"""Report cache keys."""
