"""Test fixtures for ttprag tests."""
