"""Integration tests for ebess-planner."""
