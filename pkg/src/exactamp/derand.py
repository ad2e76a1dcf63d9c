"""Exact-error derandomization on finite, explicit fixtures.

Two routes: a direct construction of the zero-error circuit for a (0, 1/2)
promise over registers P (input copy), Q (input) and R (work), and the
general route that runs the perfect distinguisher with input-independent
reflections over all inputs ``|x>|0^m>`` at once. An oracle variant keeps
the input fixed and lets a per-x oracle gate carry the variation.

Uniformity here means "same gate list for every x at a fixed size", checked
exactly; nothing is claimed about families over growing n.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import statekit as sk
from . import uniformizer as uz
from .amplifier import build_perfect_distinguisher, materialize
from .errors import InvalidPromiseError, VerificationError
from .systems import (Measurement2, QuantumSystem, SeparablePromise, classify_separable,
                      outcome_probability, rotation_angle)


def bits(x: int, n: int) -> str:
    return format(x, f"0{n}b")


@dataclass(frozen=True)
class Verdict:
    accept: bool
    p_E: float


# ---------------------------------------------------------------- language fixtures


@dataclass(frozen=True, eq=False)
class LanguageFixture:
    """Circuit ``C`` on ``n + m`` qubits run on ``|x>|0^m>``.

    Outcome E is qubit 0 reading 1 unless ``measurement`` says otherwise.
    """

    n: int
    m: int
    members: frozenset
    circuit: sk.Circuit
    promise: SeparablePromise
    measurement: sk.Projector | None = None

    def __post_init__(self):
        object.__setattr__(self, "members", frozenset(self.members))
        if self.measurement is not None:
            object.__setattr__(self, "measurement", sk.as_projector(self.measurement))
        if self.circuit.qubit_count != self.n + self.m:
            raise ValueError(f"circuit has {self.circuit.qubit_count} qubits, need n + m = {self.n + self.m}")

    @property
    def qubit_count(self) -> int:
        return self.n + self.m

    @property
    def projector(self) -> sk.Projector:
        if self.measurement is not None:
            return self.measurement
        return sk.basis_projector(self.qubit_count, 0, 1)

    def input_state(self, x: int) -> np.ndarray:
        return sk.basis_state(self.qubit_count, x << self.m)

    def system(self, x: int) -> QuantumSystem:
        return QuantumSystem(self.input_state(x), self.circuit, Measurement2(self.projector))

    def inputs(self) -> range:
        return range(1 << self.n)


def language_fixture(n: int, members, promise: SeparablePromise, m: int = 1,
                     overrides: dict | None = None) -> LanguageFixture:
    """Members get p_E = epsilon, the rest delta; ``overrides`` maps x to any other p.

    A uniformly controlled RY writes the answer on qubit ``n``, which is then
    swapped onto qubit 0. Extra work qubits pick up a CX copy of the answer.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    members = frozenset(members)
    overrides = dict(overrides or {})
    blocks = []
    for x in range(1 << n):
        p = overrides.get(x, promise.epsilon if x in members else promise.delta)
        blocks.append(sk.named_matrix("RY", (2 * rotation_angle(p),)))
    ucry = np.zeros((1 << (n + 1),) * 2, dtype=complex)
    for x, b in enumerate(blocks):
        ucry[2 * x:2 * x + 2, 2 * x:2 * x + 2] = b
    c = sk.Circuit(n + m, (sk.MatrixGate(ucry, tuple(range(n + 1)), "UCRY"),))
    for q in range(n + 1, n + m):
        c = c.gate("CX", n, q)
    c = c.gate("SWAP", 0, n)
    return LanguageFixture(n, m, members, c, promise)


def one_bit_fixture() -> LanguageFixture:
    """n = m = 1 with C|00> = |00> and C|10> = (|01> + |11>)/sqrt 2; the member is x = 1."""
    cols = {0: sk.basis_state(2, 0), 2: (sk.basis_state(2, 1) + sk.basis_state(2, 3)) / np.sqrt(2)}
    u = sk.complete_unitary(cols, 4)
    c = sk.Circuit(2, (sk.MatrixGate(u, (0, 1), "C"),))
    return LanguageFixture(1, 1, {1}, c, SeparablePromise(0.0, 0.5))


# ---------------------------------------------------------------- zero-error circuit for (0, 1/2)


@dataclass(frozen=True)
class HalfLayout:
    n: int
    m: int

    @property
    def p(self):
        return tuple(range(self.n))

    @property
    def q(self):
        return tuple(range(self.n, 2 * self.n))

    @property
    def r(self):
        return tuple(range(2 * self.n, 2 * self.n + self.m))

    @property
    def ancilla(self) -> int:
        return 2 * self.n + self.m

    @property
    def total(self) -> int:
        return 2 * self.n + self.m + 1

    @property
    def answer(self) -> int:
        return self.n


def erqp_half_transform(fixture: LanguageFixture) -> sk.Circuit:
    """Zero-error circuit for a (0, 1/2) fixture.

    Ops in order: F (P onto Q), C on QR, phase i on |1> of the first Q qubit,
    C^dagger, F, phase i on |0..0> of QR, F, C. On ``|x>|0^n>|0^m>|0>`` the
    first Q qubit then reads 1 exactly when x is a member.
    """
    pr = fixture.promise
    if abs(pr.delta) > sk.PROB_TOL or abs(pr.epsilon - 0.5) > sk.PROB_TOL:
        raise InvalidPromiseError(f"needs promise (0, 1/2), got ({pr.delta}, {pr.epsilon})")
    if fixture.projector != sk.basis_projector(fixture.qubit_count, 0, 1):
        raise ValueError("the zero-error circuit needs E = 'qubit 0 reads 1'")
    lay = HalfLayout(fixture.n, fixture.m)
    sk.check_budget(lay.total)
    c = fixture.circuit.remap(lay.q + lay.r, lay.total)
    f = sk.Circuit(lay.total, (sk.Gate("FANOUT", lay.p + lay.q),))
    p_gate = sk.Circuit(lay.total).gate("PHASE", lay.answer, params=(np.pi / 2,))
    s0 = sk.Circuit(lay.total, tuple(uz.s_theta_ops(lay.q + lay.r, lay.ancilla, np.pi / 2)))
    return f + c + p_gate + c.adjoint() + f + s0 + f + c


def half_transform_verdicts(fixture: LanguageFixture, prob_tol: float = sk.PROB_TOL) -> dict:
    circ = erqp_half_transform(fixture)
    lay = HalfLayout(fixture.n, fixture.m)
    proj = sk.basis_projector(lay.total, lay.answer, 1)
    table = {}
    for x in fixture.inputs():
        out = sk.apply_circuit(circ, sk.basis_state(lay.total, x << (lay.total - fixture.n)))
        p = proj.expectation(out)
        table[bits(x, fixture.n)] = _verdict(p, bits(x, fixture.n), prob_tol)
    return table


def _verdict(p: float, key, prob_tol: float) -> Verdict:
    if abs(p - 1.0) <= prob_tol:
        return Verdict(True, p)
    if abs(p) <= prob_tol:
        return Verdict(False, p)
    raise VerificationError(f"input {key}: final p_E = {p:.9g} is not deterministic")


# ---------------------------------------------------------------- uniform family route


@dataclass(frozen=True, eq=False)
class FamilyResult:
    circuit: sk.Circuit
    plan: object
    table: dict
    templates: list = field(repr=False, default_factory=list)


def derandomize_family(fixture: LanguageFixture, prob_tol: float = sk.PROB_TOL) -> tuple[sk.Circuit, dict]:
    """Uniform perfect distinguisher over all inputs of ``fixture``.

    Returns the shared circuit (with black-box slot ``C``) and a table
    ``bitstring -> Verdict``. Raises PromiseViolation naming every input off
    the promise, and VerificationError if the per-input gate lists differ.
    """
    res = derandomize_family_full(fixture, prob_tol)
    return res.circuit, res.table


def derandomize_family_full(fixture: LanguageFixture, prob_tol: float = sk.PROB_TOL) -> FamilyResult:
    xs = list(fixture.inputs())
    keys = [bits(x, fixture.n) for x in xs]
    systems = [fixture.system(x) for x in xs]
    classify_separable(systems, fixture.promise, prob_tol, keys)

    family = uz.OrthonormalFamily(tuple(qs.input for qs in systems))
    bmap = uz.basis_map(family)
    plan = build_perfect_distinguisher(fixture.promise)
    templates = [materialize(plan, qs.input, fixture.projector, uniform=bmap) for qs in systems]
    ref = templates[0].circuit
    for key, t in zip(keys, templates):
        diff = sk.structural_diff(ref, t.circuit)
        if diff:
            raise VerificationError(f"input {key}: gate list differs at positions {diff[:5]}")

    table = {}
    for key, qs, t in zip(keys, systems, templates):
        p = outcome_probability(t.replace(bindings={"C": qs.circuit})).p_E
        table[key] = _verdict(p, key, prob_tol)
    return FamilyResult(ref, plan, table, templates)


# ---------------------------------------------------------------- oracle route


@dataclass(frozen=True, eq=False)
class OracleFixture:
    """``template`` calls oracle slot ``"U"`` on ``oracle_target``; input is |0..0>.

    ``truth[x]`` is Phi(x); the oracle for x flips the target iff Phi(x) = 1.
    """

    truth: tuple
    template: sk.Circuit
    oracle_target: int
    projector: sk.Projector

    def __post_init__(self):
        object.__setattr__(self, "truth", tuple(int(b) for b in self.truth))
        object.__setattr__(self, "projector", sk.as_projector(self.projector))

    def oracle(self, x: int) -> sk.Circuit:
        name = "X" if self.truth[x] else "I"
        return sk.Circuit(self.template.qubit_count, (sk.Gate(name, (self.oracle_target,)),))

    def system(self, x: int) -> QuantumSystem:
        n = self.template.qubit_count
        return QuantumSystem(sk.basis_state(n, 0), self.template, Measurement2(self.projector),
                             {"U": self.oracle(x)})


def _oracle_site(n: int) -> sk.Circuit:
    return sk.Circuit(n, (sk.BlackBox("U", tuple(range(n))),))


def direct_oracle_fixture(truth) -> OracleFixture:
    """Oracle then measure the answer qubit: p_E = Phi(x)."""
    t = _oracle_site(1)
    return OracleFixture(tuple(truth), t, 0, sk.basis_projector(1, 0, 1))


def masked_oracle_fixture(truth) -> OracleFixture:
    """Qubits (answer, mask): H on mask, oracle on answer, E = |11>. p_E = Phi(x) / 2."""
    t = sk.Circuit(2).gate("H", 1) + _oracle_site(2)
    proj = sk.RankOneProjector(sk.basis_state(2, 3))
    return OracleFixture(tuple(truth), t, 0, proj)


def two_sided_oracle_fixture(truth, promise: SeparablePromise) -> OracleFixture:
    """Qubits (answer, b): RY on b, oracle on answer, controlled RY answer -> b; E = b reads 1.

    p_E = epsilon when Phi(x) = 1 and delta otherwise.
    """
    b0, b1 = rotation_angle(promise.delta), rotation_angle(promise.epsilon)
    t = (sk.Circuit(2).gate("RY", 1, params=(2 * b0,)) + _oracle_site(2)
         ).gate("CRY", 0, 1, params=(2 * (b1 - b0),))
    return OracleFixture(tuple(truth), t, 0, sk.basis_projector(2, 1, 1))


def derandomize_oracle(fixture: OracleFixture, promise: SeparablePromise,
                       prob_tol: float = sk.PROB_TOL) -> tuple[sk.Circuit, dict]:
    """One transformed template for all x; oracle sites are the only per-x variation.

    Returns the template (slot ``"U"`` unbound) and ``x -> Verdict`` where
    ``accept`` means the epsilon side.
    """
    xs = range(len(fixture.truth))
    systems = [fixture.system(x) for x in xs]
    classify_separable(systems, promise, prob_tol, list(xs))

    plan = build_perfect_distinguisher(promise)
    outer = materialize(plan, systems[0].input, fixture.projector)
    template = outer.circuit.bind(C=fixture.template)
    sites = set(template.call_positions("U"))
    concrete = [template.bind(U=fixture.oracle(x)) for x in xs]
    for x, c in zip(xs, concrete):
        extra = set(sk.structural_diff(concrete[0], c)) - sites
        if extra:
            raise VerificationError(f"x = {x}: circuits differ away from oracle sites at {sorted(extra)[:5]}")

    table = {}
    for x, c in zip(xs, concrete):
        p = outcome_probability(outer.replace(circuit=c, bindings={})).p_E
        table[x] = _verdict(p, x, prob_tol)
    return template, table
