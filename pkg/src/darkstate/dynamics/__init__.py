"""Lindblad master-equation dynamics."""
