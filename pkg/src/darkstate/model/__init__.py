"""Tavis-Cummings model, drive and dressed states."""
