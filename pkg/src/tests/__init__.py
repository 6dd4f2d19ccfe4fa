"""Shiftbench test suite."""
