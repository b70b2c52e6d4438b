"""Tests for Lindblad dynamics."""
