"""Test suite for ebess-planner."""
