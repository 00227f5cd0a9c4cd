"""Restricted isometry experiments with group-structured measurements."""
