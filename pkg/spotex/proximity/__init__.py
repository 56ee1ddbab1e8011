"""Proximity log, group detection and check-in registry."""
