"""Trajectory engine, scenario configuration, CSV output and the command-line interface."""
