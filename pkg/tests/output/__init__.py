"""Tests for result output."""
