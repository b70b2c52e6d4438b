"""Tests for simulated experiments."""
