"""Simulation, evolution and analysis core."""
