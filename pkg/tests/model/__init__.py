"""Tests for the Tavis-Cummings model."""
