"""Tests for operator algebra."""
