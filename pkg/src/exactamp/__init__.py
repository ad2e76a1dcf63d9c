"""Exact amplitude amplification for two-sided-error quantum systems on a dense simulator."""

from .statekit import Circuit, Gate, MatrixGate, BlackBox, ProjectorPhase, apply_circuit
from .systems import QuantumSystem, Measurement2, SeparablePromise, outcome_probability
from .amplifier import build_perfect_distinguisher, build_separator, apply_plan

__all__ = [
    "Circuit", "Gate", "MatrixGate", "BlackBox", "ProjectorPhase", "apply_circuit",
    "QuantumSystem", "Measurement2", "SeparablePromise", "outcome_probability",
    "build_perfect_distinguisher", "build_separator", "apply_plan",
]
