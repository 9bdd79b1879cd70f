"""Shared numerics and the error hierarchy."""
