"""Convex bodies, polarity and slices."""
