"""Shared pytest configuration (keeps this directory importable for helpers)."""
