"""Validation tests against actual generated data."""
