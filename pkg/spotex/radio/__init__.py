"""Fingerprint data model and similarity metrics."""
