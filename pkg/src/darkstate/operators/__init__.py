"""Composite-space operator algebra."""
