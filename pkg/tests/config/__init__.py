"""Tests for run configuration loading."""
