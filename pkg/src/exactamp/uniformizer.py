"""Input reflections that do not depend on the input state.

When all inputs ``psi_v`` form an orthonormal family, a fixed unitary ``U``
sends them to standard basis states ``|v>``. A copy register holding ``|v>``
(prepared once with fanout) then lets the reflection about ``psi_v`` be built
from ``U``, fanout and a ``|0..0>`` phase alone:

    U_R = (I ⊗ U^dagger) F (I ⊗ S_theta) F (I ⊗ U)
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import statekit as sk
from .errors import DimensionError, NonOrthonormalError


@dataclass(frozen=True, eq=False)
class OrthonormalFamily:
    states: tuple

    def __post_init__(self):
        states = tuple(np.asarray(s, dtype=complex).ravel() for s in self.states)
        object.__setattr__(self, "states", states)
        if not states:
            raise NonOrthonormalError("empty family")
        dim = len(states[0])
        sk.qubits_of(dim)
        if any(len(s) != dim for s in states):
            raise NonOrthonormalError("family states have different lengths")
        if len(states) > dim:
            raise NonOrthonormalError(f"{len(states)} states cannot be orthonormal in dimension {dim}")
        gram = np.array([[np.vdot(a, b) for b in states] for a in states])
        dev = float(np.max(np.abs(gram - np.eye(len(states)))))
        if dev > 1e-10:
            raise NonOrthonormalError(f"family is not orthonormal (max Gram deviation {dev:.3g})")

    @property
    def qubit_count(self) -> int:
        return sk.qubits_of(len(self.states[0]))

    def __len__(self):
        return len(self.states)


@dataclass(frozen=True, eq=False)
class BasisMap:
    """``unitary @ family.states[j] == |j>``; not validated on construction."""

    unitary: np.ndarray
    family: OrthonormalFamily

    @property
    def qubit_count(self) -> int:
        return self.family.qubit_count

    def check(self, op_tol: float = sk.OP_TOL) -> sk.ValidationReport:
        report = sk.validate(self.unitary, "unitary", op_tol=op_tol)
        for j, psi in enumerate(self.family.states):
            dev = float(np.max(np.abs(self.unitary @ psi - sk.basis_state(self.qubit_count, j))))
            if dev > op_tol:
                report.violations.append((f"member {j} not mapped to |{j}>", dev))
        return report


def basis_map(family: OrthonormalFamily) -> BasisMap:
    """U with U psi_j = |j>, completed deterministically on the orthogonal complement."""
    dim = 1 << family.qubit_count
    w = sk.complete_unitary(dict(enumerate(family.states)), dim)
    return BasisMap(w.conj().T, family)


def p_theta(theta: float) -> np.ndarray:
    """Single-qubit ``I - (1 - e^{i theta}) |0><0|``: the phase lands on |0>."""
    return np.diag([np.exp(1j * theta), 1.0])


def s_theta_ops(targets: Sequence[int], ancilla: int, theta: float) -> list:
    """Phase ``e^{i theta}`` on ``|0..0>`` of ``targets``; the ancilla starts and ends in |0>."""
    targets = list(targets)
    flips = [sk.Gate("X", (q,)) for q in targets]
    trigger = sk.Gate("MCX", tuple(targets) + (ancilla,))
    return flips + [trigger, sk.Gate("PHASE", (ancilla,), (theta,)), trigger] + flips


def s_theta_gate(m: int, theta: float) -> sk.Circuit:
    """``S_theta`` on qubits 0..m-1 with qubit m as the reusable ancilla."""
    if m < 1:
        raise ValueError("m must be >= 1")
    return sk.Circuit(m + 1, tuple(s_theta_ops(range(m), m, theta)))


def prep_ops(bmap: BasisMap, copy: Sequence[int], data: Sequence[int]) -> list:
    """Write ``|v> = U|psi_v>`` into the copy register, leaving the data register as it was."""
    core = tuple(data[: bmap.qubit_count])
    return [
        sk.MatrixGate(bmap.unitary, core, "U"),
        sk.Gate("FANOUT", core + tuple(copy)),
        sk.MatrixGate(bmap.unitary, core, "U", dagger=True),
    ]


def reflection_ops(bmap: BasisMap, theta: float, copy: Sequence[int], data: Sequence[int],
                   ancilla: int) -> list:
    """``U_R`` acting on ``data``. The first ``bmap.qubit_count`` data qubits carry the
    family; any further data qubits are ancillae expected in |0>."""
    core = tuple(data[: bmap.qubit_count])
    return [
        sk.MatrixGate(bmap.unitary, core, "U"),
        sk.Gate("FANOUT", tuple(copy) + core),
        *s_theta_ops(data, ancilla, theta),
        sk.Gate("FANOUT", tuple(copy) + core),
        sk.MatrixGate(bmap.unitary, core, "U", dagger=True),
    ]


def canonical_layout(m: int):
    """(copy, data, ancilla, total) for copy register ⊗ data register ⊗ ancilla."""
    return tuple(range(m)), tuple(range(m, 2 * m)), 2 * m, 2 * m + 1


def uniform_s_psi(bmap: BasisMap, theta: float, m: int | None = None) -> tuple[sk.Circuit, sk.Circuit]:
    """``(prep, U_R)`` on the canonical layout of :func:`canonical_layout`."""
    m = bmap.qubit_count if m is None else m
    if m != bmap.qubit_count:
        raise DimensionError(f"map acts on {bmap.qubit_count} qubits, m = {m}")
    report = bmap.check()
    if not report.ok:
        raise ValueError(f"invalid basis map: {report}")
    copy, data, anc, total = canonical_layout(m)
    sk.check_budget(total)
    prep = sk.Circuit(total, tuple(prep_ops(bmap, copy, data)))
    reflect = sk.Circuit(total, tuple(reflection_ops(bmap, theta, copy, data, anc)))
    return prep, reflect


def verify_uniform(bmap: BasisMap, theta: float) -> float:
    """Largest entrywise deviation of prep + U_R from ``I ⊗ S_psi_v ⊗ I`` over family members.

    Works on possibly corrupted maps, so it builds the circuits without
    checking ``bmap``.
    """
    m = bmap.qubit_count
    copy, data, anc, total = canonical_layout(m)
    prep = sk.Circuit(total, tuple(prep_ops(bmap, copy, data)))
    reflect = sk.Circuit(total, tuple(reflection_ops(bmap, theta, copy, data, anc)))
    zero_copy, zero_anc = sk.basis_state(m, 0), sk.basis_state(1, 0)
    d = 1 << m
    worst = 0.0
    for j, psi in enumerate(bmap.family.states):
        v = sk.basis_state(m, j)
        prepared = sk.apply_circuit(prep, sk.tensor(zero_copy, psi, zero_anc))
        worst = max(worst, float(np.max(np.abs(prepared - sk.tensor(v, psi, zero_anc)))))

        s_psi = np.eye(d, dtype=complex) - (1 - np.exp(1j * theta)) * np.outer(psi, psi.conj())
        inputs = np.stack([sk.tensor(v, sk.basis_state(m, k), zero_anc) for k in range(d)], axis=1)
        expected = np.stack([sk.tensor(v, s_psi[:, k], zero_anc) for k in range(d)], axis=1)
        worst = max(worst, float(np.max(np.abs(sk.apply_circuit(reflect, inputs) - expected))))
    return worst
