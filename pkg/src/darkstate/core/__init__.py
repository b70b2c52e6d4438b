"""Shared domain types and errors."""
