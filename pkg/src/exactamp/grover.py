"""Generalized Grover iterator G = C S_psi C^dagger S_P C and its gain.

With ``S_psi = I - (1 - e^{i theta}) |psi><psi|`` and
``S_P = I - (1 - e^{i alpha}) P_E``, one application multiplies the
E-probability ``p`` by

    Delta = |e^{i theta} + e^{i alpha} - 1 + (1 - e^{i alpha})(1 - e^{i theta}) p|^2
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import statekit as sk
from .systems import QuantumSystem


@dataclass(frozen=True)
class PhasePair:
    theta: float
    alpha: float

    def __post_init__(self):
        for name in ("theta", "alpha"):
            v = getattr(self, name)
            if not 0.0 <= v <= np.pi:
                raise ValueError(f"{name}={v} outside [0, pi]")


@dataclass(frozen=True)
class GainReport:
    p_before: float
    delta_gain: float
    p_after: float


def _check_p(p):
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability {p} outside [0, 1]")


def delta_gain(phases: PhasePair, p: float) -> float:
    _check_p(p)
    et, ea = np.exp(1j * phases.theta), np.exp(1j * phases.alpha)
    return float(abs(et + ea - 1 + (1 - ea) * (1 - et) * p) ** 2)


def delta_gain_equal_phases(theta: float, p: float) -> float:
    """Closed form of the gain when theta = alpha."""
    _check_p(p)
    return float(((1 - 2 * p) * np.cos(theta) - 2 * (1 - p)) ** 2 + np.sin(theta) ** 2)


def gain_report(phases: PhasePair, p: float) -> GainReport:
    d = delta_gain(phases, p)
    return GainReport(p, d, p * d)


def optimal_phase(p: float) -> tuple[float, float, float]:
    """``(theta, Delta*, p_after)`` of the best equal-phase iterator for ``0 < p <= 1/2``.

    At p = 1/4 the arccos branch is used; it coincides with theta = pi there.
    """
    if p <= 0.0:
        raise ValueError("p = 0: nothing to amplify")
    if p > 0.5:
        raise ValueError(f"p = {p} > 1/2: reduce to 1/2 with an ancilla first")
    if p >= 0.25:
        theta = float(np.arccos(np.clip(1.0 - 1.0 / (2.0 * p), -1.0, 1.0)))
        return theta, 1.0 / p, 1.0
    gain = (3.0 - 4.0 * p) ** 2
    return float(np.pi), gain, p * gain


def input_reflection(qs: QuantumSystem, theta: float) -> sk.Circuit:
    """Non-uniform ``S_psi`` built from the system's own input state."""
    n = qs.qubit_count
    op = sk.ProjectorPhase(sk.RankOneProjector(qs.input), theta, range(n), label="S_psi")
    return sk.Circuit(n, (op,))


def grover_iterator(qs: QuantumSystem, phases: PhasePair,
                    reflect_input: Callable[[float], sk.Circuit] | None = None) -> sk.Circuit:
    """Circuit for C, S_P(alpha), C^dagger, S_psi(theta), C applied in that order.

    ``reflect_input`` replaces the default rank-one ``S_psi`` gate, e.g. with
    the uniform construction of :mod:`exactamp.uniformizer`.
    """
    n = qs.qubit_count
    c = qs.circuit
    s_p = sk.Circuit(n, (sk.ProjectorPhase(qs.measurement.projector_E, phases.alpha, range(n), label="S_P"),))
    s_psi = reflect_input(phases.theta) if reflect_input else input_reflection(qs, phases.theta)
    return c + s_p + c.adjoint() + s_psi + c


def optimal_iterator(qs: QuantumSystem, p: float,
                     reflect_input: Callable[[float], sk.Circuit] | None = None) -> QuantumSystem:
    """The optimal B-transform for declared probability ``p``: same input and measurement."""
    theta, _, _ = optimal_phase(p)
    return qs.replace(circuit=grover_iterator(qs, PhasePair(theta, theta), reflect_input))
