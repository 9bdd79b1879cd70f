"""Holmes-Thompson volume and area."""
