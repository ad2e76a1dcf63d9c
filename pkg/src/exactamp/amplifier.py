"""Plans of B-transforms that turn a (delta, epsilon)-separable collection into a perfect one.

A plan is built analytically first: a list of stages plus a ledger of the
E-probability on both promise sides after every stage. Only then is it
materialized into a circuit around a black-box slot standing for the
original ``C``.

The "good" side is the one that starts at ``epsilon``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import ClassVar, Sequence

import numpy as np

from . import statekit as sk
from .errors import VerificationError
from .grover import PhasePair, delta_gain, grover_iterator, optimal_phase
from .systems import (Measurement2, QuantumSystem, SeparablePromise, classify_separable,
                      extend_with_ancilla, outcome_probability, rotation_angle, swap_outcomes)

# Values this close below 1/4 count as having reached 1/4, so that the
# triple-angle chain stops at the exact fixture sin^2(pi/18) -> 1/4.
CHAIN_SLACK = 1e-12


# ---------------------------------------------------------------- stages


@dataclass(frozen=True)
class BStar:
    """Optimal Grover iterator tuned to ``declared_p`` on the good side."""

    declared_p: float
    theta: float = field(default=None)
    kind: ClassVar[str] = "b_star"
    multiplier: ClassVar[int] = 3

    def __post_init__(self):
        if not 0.0 < self.declared_p <= 1.0:
            raise ValueError(f"declared_p {self.declared_p} outside (0, 1]")
        if self.theta is None:
            object.__setattr__(self, "theta", optimal_phase(self.declared_p)[0])

    @property
    def phases(self) -> PhasePair:
        return PhasePair(self.theta, self.theta)

    def predict(self, p: float) -> float:
        return min(max(p * delta_gain(self.phases, p), 0.0), 1.0)

    def __str__(self):
        return f"b_star(theta={self.theta:.6g}, p={self.declared_p:.6g})"


@dataclass(frozen=True)
class AncillaReduce:
    """One extra qubit measured with the rank-one projector of :func:`p_epsilon_projector`."""

    epsilon: float
    kind: ClassVar[str] = "ancilla_reduce"
    multiplier: ClassVar[int] = 1

    def __post_init__(self):
        if not 0.5 < self.epsilon <= 1.0:
            raise ValueError(f"ancilla_reduce needs epsilon in (1/2, 1], got {self.epsilon}")

    def predict(self, p: float) -> float:
        return p / (2.0 * self.epsilon)

    def __str__(self):
        return f"ancilla_reduce(epsilon={self.epsilon:.6g})"


@dataclass(frozen=True)
class Swap:
    """Exchange the roles of E and F. ``relabel`` marks the final cosmetic swap."""

    relabel: bool = False
    multiplier: ClassVar[int] = 1

    @property
    def kind(self) -> str:
        return "relabel" if self.relabel else "swap"

    def predict(self, p: float) -> float:
        return 1.0 - p

    def __str__(self):
        return self.kind


Stage = BStar | AncillaReduce | Swap


@dataclass(frozen=True)
class ProbabilityLedger:
    """``rows[i] = (p_good, p_bad)`` before stage ``i``; the last row is the final state."""

    rows: tuple

    @property
    def good(self) -> np.ndarray:
        return np.array([r[0] for r in self.rows])

    @property
    def bad(self) -> np.ndarray:
        return np.array([r[1] for r in self.rows])

    @property
    def final(self) -> tuple:
        return self.rows[-1]

    def __len__(self):
        return len(self.rows)


@dataclass(frozen=True)
class AmplificationPlan:
    promise: SeparablePromise
    stages: tuple
    ledger: ProbabilityLedger

    @property
    def query_count(self) -> int:
        count = 1
        for st in self.stages:
            count *= st.multiplier
        return count

    @property
    def is_perfect(self) -> bool:
        g, b = self.ledger.final
        return abs(g - 1) <= sk.PROB_TOL and abs(b) <= sk.PROB_TOL

    def table(self) -> list[dict]:
        """One row per stage: the stage and the ledger pair after it."""
        rows = [dict(stage="input", p_good=self.ledger.rows[0][0], p_bad=self.ledger.rows[0][1])]
        for st, (g, b) in zip(self.stages, self.ledger.rows[1:]):
            rows.append(dict(stage=str(st), p_good=g, p_bad=b))
        return rows


def _ledger(start: tuple, stages: Sequence, prob_tol: float = sk.PROB_TOL) -> ProbabilityLedger:
    rows = [tuple(start)]
    for st in stages:
        g, b = rows[-1]
        g, b = st.predict(g), st.predict(b)
        if abs(g - b) < prob_tol:
            raise ValueError(f"promise sides collapsed after {st}: {g} vs {b}")
        rows.append((g, b))
    return ProbabilityLedger(tuple(rows))


# ---------------------------------------------------------------- schedule


@dataclass(frozen=True)
class Schedule:
    epsilon: float
    beta: float
    epsilons: tuple

    @property
    def k(self) -> int:
        return len(self.epsilons)

    def closed_form(self) -> np.ndarray:
        j = np.arange(1, self.k + 1)
        return np.sin(3.0 ** j * self.beta) ** 2

    @property
    def calls(self) -> list[int]:
        """Calls to C after each chain step."""
        return [3 ** j for j in range(1, self.k + 1)]


def epsilon_schedule(epsilon: float) -> Schedule:
    """Iterate ``p -> p (3 - 4p)^2`` from ``epsilon`` until the value first reaches 1/4."""
    if not 0.0 < epsilon < 0.25:
        raise ValueError(f"epsilon {epsilon} outside (0, 1/4)")
    values, p = [], epsilon
    while p < 0.25 - CHAIN_SLACK:
        p = p * (3.0 - 4.0 * p) ** 2
        values.append(p)
    return Schedule(epsilon, rotation_angle(epsilon), tuple(values))


def p_epsilon_projector(epsilon: float) -> sk.DenseProjector:
    """Rank-one projector onto ``sqrt(1/2e)|0> + sqrt(1 - 1/2e)|1>``."""
    if not 0.5 < epsilon <= 1.0:
        raise ValueError(f"epsilon {epsilon} outside (1/2, 1]")
    a = 1.0 / (2.0 * epsilon)
    off = np.sqrt(a * (1.0 - a))
    return sk.DenseProjector(np.array([[a, off], [off, 1.0 - a]], dtype=complex))


# ---------------------------------------------------------------- planning


def _separator_stages(epsilon: float) -> list:
    """Stages that take an epsilon-side probability to exactly 1 (0 stays 0)."""
    if epsilon >= 1.0:
        return []
    if epsilon > 0.5:
        return [AncillaReduce(epsilon), BStar(0.5)]
    if epsilon >= 0.25 - CHAIN_SLACK:
        return [BStar(epsilon)]
    stages, p = [], epsilon
    while p < 0.25 - CHAIN_SLACK:
        st = BStar(p)
        stages.append(st)
        p = st.predict(p)
    return stages + _separator_stages(p)


def build_separator(promise: SeparablePromise) -> AmplificationPlan:
    """Plan mapping the epsilon side to probability 1; delta = 0 stays at 0."""
    stages = tuple(_separator_stages(promise.epsilon))
    return AmplificationPlan(promise, stages, _ledger((promise.epsilon, promise.delta), stages))


def build_perfect_distinguisher(promise: SeparablePromise) -> AmplificationPlan:
    """Plan sending the epsilon side to E with certainty and the delta side to F.

    separator(epsilon), swap, separator(1 - delta'), relabel swap; each
    separator is skipped when its side already sits at 1.
    """
    if promise.delta == 0.0 and promise.epsilon == 1.0:
        return AmplificationPlan(promise, (), ProbabilityLedger(((1.0, 0.0),)))
    first = _separator_stages(promise.epsilon)
    after_first = _ledger((promise.epsilon, promise.delta), first)
    delta1 = after_first.final[1]
    second = _separator_stages(1.0 - delta1) if delta1 > 0.0 else []
    stages = tuple(first + [Swap()] + second + [Swap(relabel=True)])
    return AmplificationPlan(promise, stages, _ledger((promise.epsilon, promise.delta), stages))


# ---------------------------------------------------------------- materialization


def _fresh_slot(qs: QuantumSystem | None) -> str:
    taken = set() if qs is None else set(qs.bindings) | qs.circuit.slots()
    slot = "C"
    while slot in taken:
        slot += "'"
    return slot


def materialize(plan: AmplificationPlan, input_state: np.ndarray, projector, uniform=None,
                slot: str = "C", trace: bool = False):
    """Template system for ``plan`` with the source circuit left as black box ``slot``.

    ``uniform`` (a :class:`~exactamp.uniformizer.BasisMap`) switches the input
    reflections to the uniform construction. The layout is then
    ``[data | copy | reflection ancilla | plan ancillae]`` and a copy-register
    preparation runs before the body. With ``trace`` the systems after every
    stage are returned (index 0 is the untouched source).
    """
    from . import uniformizer as uz

    psi = np.asarray(input_state, dtype=complex)
    n = sk.qubits_of(len(psi))
    proj = sk.as_projector(projector)
    if uniform is None:
        qs = QuantumSystem(psi, sk.Circuit(n, (sk.BlackBox(slot, tuple(range(n))),)), Measurement2(proj))
        systems = [qs]
        for st in plan.stages:
            systems.append(_apply_stage(systems[-1], st, None))
        return systems if trace else systems[-1]

    if uniform.qubit_count != n:
        raise ValueError(f"basis map acts on {uniform.qubit_count} qubits, system has {n}")
    width = 2 * n + 1
    sk.check_budget(width)
    copy, anc = tuple(range(n, 2 * n)), 2 * n
    start = QuantumSystem(
        sk.tensor(psi, sk.basis_state(n + 1, 0)),
        sk.Circuit(width, (sk.BlackBox(slot, tuple(range(n))),)),
        Measurement2(proj.kron(sk.IdentityProjector(1 << (n + 1)))),
    )
    bodies = [start]
    for st in plan.stages:
        cur = bodies[-1]

        def reflect(theta, total=cur.qubit_count):
            data = tuple(range(n)) + tuple(range(width, total))
            return sk.Circuit(total, tuple(uz.reflection_ops(uniform, theta, copy, data, anc)))

        bodies.append(_apply_stage(cur, st, reflect))

    def with_prep(qs):
        prep = sk.Circuit(qs.qubit_count, tuple(uz.prep_ops(uniform, copy, tuple(range(n)))))
        return qs.replace(circuit=prep + qs.circuit)

    systems = [with_prep(b) for b in bodies]
    return systems if trace else systems[-1]


def _apply_stage(qs: QuantumSystem, st, reflect) -> QuantumSystem:
    if isinstance(st, BStar):
        return qs.replace(circuit=grover_iterator(qs, st.phases, reflect))
    if isinstance(st, AncillaReduce):
        return extend_with_ancilla(qs, 1, p_epsilon_projector(st.epsilon))
    if isinstance(st, Swap):
        return swap_outcomes(qs)
    raise TypeError(f"unknown stage {st!r}")


def _bind(template: QuantumSystem, qs: QuantumSystem, slot: str) -> QuantumSystem:
    return template.replace(bindings={**qs.bindings, slot: qs.circuit})


def trace_plan(plan: AmplificationPlan, qs: QuantumSystem, uniform=None) -> list[float]:
    """Simulated E-probability of ``qs`` after each stage, starting with the source."""
    slot = _fresh_slot(qs)
    systems = materialize(plan, qs.input, qs.measurement.projector_E, uniform, slot, trace=True)
    return [outcome_probability(_bind(t, qs, slot)).p_E for t in systems]


def apply_plan(plan: AmplificationPlan, qs: QuantumSystem, verify: bool = True,
               prob_tol: float = sk.PROB_TOL, uniform=None) -> QuantumSystem:
    """Materialize ``plan`` around ``qs``.

    In verify mode the source is first classified against the plan's promise
    and every stage is re-simulated against the ledger.
    """
    slot = _fresh_slot(qs)
    if not verify:
        return _bind(materialize(plan, qs.input, qs.measurement.projector_E, uniform, slot), qs, slot)
    side = classify_separable([qs], plan.promise, prob_tol)[0]
    column = 0 if side == "high" else 1
    systems = [_bind(t, qs, slot) for t in
               materialize(plan, qs.input, qs.measurement.projector_E, uniform, slot, trace=True)]
    for i, (sys_i, row) in enumerate(zip(systems, plan.ledger.rows)):
        p = outcome_probability(sys_i).p_E
        if abs(p - row[column]) > prob_tol:
            where = "input" if i == 0 else str(plan.stages[i - 1])
            raise VerificationError(
                f"stage {i} ({where}): simulated {p:.12g}, ledger {row[column]:.12g} on the {side} side")
    return systems[-1]


def query_count(plan: AmplificationPlan) -> int:
    """Black-box calls in the plan materialized on a one-qubit placeholder."""
    template = materialize(plan, sk.basis_state(1, 0), sk.basis_projector(1, 0, 1))
    return template.circuit.call_count("C")


# ---------------------------------------------------------------- iterative form


def iterative_equivalent(qs: QuantumSystem, k: int) -> tuple[sk.Circuit, float]:
    """``Q^{(3^k - 1)/2} C`` with ``Q = C S_psi C^dagger S_P`` at theta = alpha = pi.

    Returns that circuit and its largest entrywise deviation from the
    recursive ``C_k`` built from ``k`` nested pi-phase iterators.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    pi = PhasePair(np.pi, np.pi)
    recursive = qs
    for _ in range(k):
        recursive = recursive.replace(circuit=grover_iterator(recursive, pi))

    n = qs.qubit_count
    c = qs.circuit
    s_p = sk.Circuit(n, (sk.ProjectorPhase(qs.measurement.projector_E, np.pi, range(n), label="S_P"),))
    s_psi = sk.Circuit(n, (sk.ProjectorPhase(sk.RankOneProjector(qs.input), np.pi, range(n), label="S_psi"),))
    q_block = s_p + c.adjoint() + s_psi + c
    iterative = c
    for _ in range((3 ** k - 1) // 2):
        iterative = iterative + q_block

    dev = float(np.max(np.abs(sk.circuit_matrix(iterative, qs.bindings)
                              - sk.circuit_matrix(recursive.circuit, qs.bindings))))
    return iterative, dev


def q_matrix(qs: QuantumSystem) -> np.ndarray:
    """Dense ``Q = C S_psi C^dagger S_P`` at pi phases."""
    cm = sk.circuit_matrix(qs.circuit, qs.bindings)
    s_psi = sk.phase_on_projector(sk.RankOneProjector(qs.input), np.pi)
    s_p = sk.phase_on_projector(qs.measurement.projector_E, np.pi)
    return cm @ s_psi @ cm.conj().T @ s_p
