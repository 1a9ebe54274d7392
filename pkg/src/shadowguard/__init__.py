"""Statevector VQE toolkit with classical-shadow monitoring of subsystem entanglement."""

__version__ = "0.1.0"
