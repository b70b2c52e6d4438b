"""Nonlinear least-squares fitting."""
