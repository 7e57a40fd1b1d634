"""Simulate fold/cusp threshold crossings and check the tail of the resulting losses."""
