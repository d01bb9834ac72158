"""Performance benchmarking tests."""
