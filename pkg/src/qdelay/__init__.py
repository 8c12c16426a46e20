"""Simulation of the quantum delayed-choice experiment with a quantum-controlled beam-splitter."""

__version__ = "0.1.0"
