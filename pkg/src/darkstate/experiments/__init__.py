"""Simulated spectroscopy and lifetime experiments."""
