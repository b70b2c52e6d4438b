"""Tests for least-squares fitting."""
