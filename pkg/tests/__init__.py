"""Tests for darkstate."""
