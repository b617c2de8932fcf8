"""Interference phototaxis: evolved CTRNN robots under motor-driven sensory interference."""

__version__ = "0.1.0"
