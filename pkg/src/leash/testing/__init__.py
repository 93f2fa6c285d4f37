"""Scripted fixtures for integration tests and demos."""
