"""Quantum systems <input, circuit, two-outcome measurement> and their elementary rewrites."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import statekit as sk
from .errors import DimensionError, InvalidPromiseError, PromiseViolation


@dataclass(frozen=True, eq=False)
class Measurement2:
    """Two-outcome projective measurement; outcome E is ``projector_E``, F its complement."""

    projector_E: sk.Projector

    def __post_init__(self):
        object.__setattr__(self, "projector_E", sk.as_projector(self.projector_E))

    @property
    def projector_F(self) -> sk.Projector:
        return self.projector_E.complement()

    @property
    def qubit_count(self) -> int:
        return self.projector_E.qubit_count

    def swapped(self) -> "Measurement2":
        return Measurement2(self.projector_E.complement())

    def __eq__(self, other):
        return isinstance(other, Measurement2) and self.projector_E == other.projector_E


@dataclass(frozen=True, eq=False)
class QuantumSystem:
    """``<|psi>, C, P>``.

    ``bindings`` supplies circuits for black-box slots in ``circuit``; a
    B-transformed system keeps the original circuit as slot ``"C"``.
    """

    input: np.ndarray
    circuit: sk.Circuit
    measurement: Measurement2
    bindings: Mapping = field(default_factory=dict)

    def __post_init__(self):
        psi = np.asarray(self.input, dtype=complex)
        object.__setattr__(self, "input", psi)
        if not isinstance(self.measurement, Measurement2):
            object.__setattr__(self, "measurement", Measurement2(self.measurement))
        object.__setattr__(self, "bindings", dict(self.bindings))
        n = self.circuit.qubit_count
        if psi.shape != (1 << n,):
            raise DimensionError(f"input of length {len(psi)} for a {n}-qubit circuit")
        if self.measurement.projector_E.dim != 1 << n:
            raise DimensionError(f"projector of dim {self.measurement.projector_E.dim} for {n} qubits")

    @property
    def qubit_count(self) -> int:
        return self.circuit.qubit_count

    def output_state(self) -> np.ndarray:
        return sk.apply_circuit(self.circuit, self.input, self.bindings)

    def replace(self, **changes) -> "QuantumSystem":
        fields = dict(input=self.input, circuit=self.circuit,
                      measurement=self.measurement, bindings=self.bindings)
        fields.update(changes)
        return QuantumSystem(**fields)

    def __eq__(self, other):
        return (isinstance(other, QuantumSystem)
                and np.array_equal(self.input, other.input)
                and self.circuit == other.circuit
                and self.measurement == other.measurement
                and dict(self.bindings) == dict(other.bindings))


@dataclass(frozen=True)
class OutcomeDistribution:
    p_E: float

    @property
    def p_F(self) -> float:
        return 1.0 - self.p_E


@dataclass(frozen=True)
class SeparablePromise:
    """Every system has ``p_E`` exactly ``delta`` (low side) or ``epsilon`` (high side)."""

    delta: float
    epsilon: float

    def __post_init__(self):
        if not 0.0 <= self.delta < self.epsilon <= 1.0:
            raise InvalidPromiseError(f"need 0 <= delta < epsilon <= 1, got ({self.delta}, {self.epsilon})")


def outcome_probability(qs: QuantumSystem) -> OutcomeDistribution:
    out = qs.output_state()
    v = qs.measurement.projector_E.apply(out.reshape(-1, 1)).ravel()
    amp = np.vdot(out, v)
    if abs(amp.imag) > 1e-12:
        raise ValueError(f"<psi|P|psi> has imaginary part {amp.imag:.3g}; projector is not Hermitian")
    return OutcomeDistribution(float(min(max(amp.real, 0.0), 1.0)))


def extend_with_ancilla(qs: QuantumSystem, ancilla_count: int, ancilla_projector) -> QuantumSystem:
    """``<psi ⊗ |0..0>, C ⊗ I, P_E ⊗ P_a>``."""
    if ancilla_count < 1:
        raise ValueError("ancilla_count must be >= 1")
    pa = sk.as_projector(ancilla_projector)
    if pa.dim != 1 << ancilla_count:
        raise DimensionError(f"ancilla projector of dim {pa.dim} for {ancilla_count} ancillae")
    n = qs.qubit_count + ancilla_count
    sk.check_budget(n)
    return QuantumSystem(
        np.kron(qs.input, sk.basis_state(ancilla_count, 0)),
        qs.circuit.widen(n),
        Measurement2(qs.measurement.projector_E.kron(pa)),
        qs.bindings,
    )


def swap_outcomes(qs: QuantumSystem) -> QuantumSystem:
    return qs.replace(measurement=qs.measurement.swapped())


def classify_separable(systems: Sequence[QuantumSystem], promise: SeparablePromise,
                       prob_tol: float = sk.PROB_TOL, keys: Sequence | None = None) -> list:
    """Label each system ``"low"`` (p_E = delta) or ``"high"`` (p_E = epsilon).

    Raises PromiseViolation listing every system that matches neither side.
    """
    if not systems:
        raise ValueError("no systems to classify")
    keys = list(range(len(systems))) if keys is None else list(keys)
    labels, bad = [], []
    for key, qs in zip(keys, systems):
        p = outcome_probability(qs).p_E
        if abs(p - promise.delta) <= prob_tol:
            labels.append("low")
        elif abs(p - promise.epsilon) <= prob_tol:
            labels.append("high")
        else:
            labels.append(None)
            bad.append((key, p))
    if bad:
        detail = ", ".join(f"{k}: p_E={p:.9g}" for k, p in bad)
        raise PromiseViolation(
            f"promise ({promise.delta:.9g}, {promise.epsilon:.9g}) violated by {detail}", bad)
    return labels


# ---------------------------------------------------------------- fixtures


def rotation_angle(p: float) -> float:
    """beta with sin^2(beta) = p."""
    return float(np.arcsin(np.sqrt(p)))


def engineered_system(p: float, padding: int = 0) -> QuantumSystem:
    """System with p_E = sin^2(beta) = p exactly in closed form.

    Qubit 0 gets RY(2 beta) and outcome E is qubit 0 reading 1. ``padding``
    extra qubits are entangled with qubit 0 without changing its marginal.
    """
    n = 1 + padding
    c = sk.Circuit(n).gate("RY", 0, params=[2 * rotation_angle(p)])
    for q in range(1, n):
        c = c.gate("CX", 0, q).gate("H", q)
    return QuantumSystem(sk.basis_state(n, 0), c, Measurement2(sk.basis_projector(n, 0, 1)))
