"""Blaschke normal, the L function and the dual centroid."""
