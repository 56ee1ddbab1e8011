"""Deterministic scan-log simulator."""
