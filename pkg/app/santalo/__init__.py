"""Santaló points of the Holmes-Thompson area functional."""
