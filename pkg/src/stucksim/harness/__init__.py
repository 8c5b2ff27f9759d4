"""Batch runner, replay, command line."""
