import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from exactamp import statekit as sk
from exactamp import uniformizer as uz
from exactamp.amplifier import (AmplificationPlan, AncillaReduce, BStar, ProbabilityLedger, Swap,
                                apply_plan, build_perfect_distinguisher, build_separator,
                                epsilon_schedule, iterative_equivalent, materialize,
                                p_epsilon_projector, q_matrix, query_count, trace_plan)
from exactamp.errors import InvalidPromiseError, PromiseViolation, VerificationError
from exactamp.grover import delta_gain_equal_phases
from exactamp.systems import (Measurement2, QuantumSystem, SeparablePromise, engineered_system,
                              extend_with_ancilla, outcome_probability)

import oracles

TRAJECTORY_BAD = [1 / 3, 1 / 4, 0.8125, 0.1875, 0.94921875, 0.5, 1.0, 0.0]


def chain_value(p):
    """One pi-phase step worked out by hand: p (3 - 4p)^2."""
    return p * (3 - 4 * p) ** 2


def random_promise(rng, gap=0.05):
    while True:
        d, e = sorted(rng.uniform(0, 1, 2))
        if e - d >= gap:
            return SeparablePromise(float(d), float(e))


# ---------------------------------------------------------------- schedule


@given(st.floats(1e-6, 0.2499, allow_nan=False))
@settings(max_examples=100, deadline=None)
def test_schedule_matches_closed_form(eps):
    s = epsilon_schedule(eps)
    beta = np.arcsin(np.sqrt(eps))
    closed = [np.sin(3 ** j * beta) ** 2 for j in range(1, s.k + 1)]
    assert np.max(np.abs(np.array(s.epsilons) - closed)) < 1e-12
    assert all(e < 0.25 for e in s.epsilons[:-1]) and s.epsilons[-1] >= 0.25 - 1e-12
    assert all(a < b for a, b in zip(s.epsilons, s.epsilons[1:]))


def test_schedule_examples():
    s = epsilon_schedule(np.sin(np.pi / 18) ** 2)
    assert s.k == 1 and s.epsilons[0] == pytest.approx(0.25, abs=1e-14)
    s = epsilon_schedule(0.01)
    # sin^2(3 beta) and sin^2(9 beta) with beta = arcsin(0.1)
    assert s.k == 2
    assert s.epsilons[0] == pytest.approx(chain_value(0.01), abs=1e-15)
    assert s.epsilons[1] == pytest.approx(np.sin(9 * np.arcsin(0.1)) ** 2, abs=1e-12)
    assert s.epsilons[1] > 0.5
    s = epsilon_schedule(0.1875)
    assert s.epsilons == pytest.approx((0.1875 * 2.25 ** 2,))
    assert s.calls == [3]


@pytest.mark.parametrize("bad", [0.0, 0.25, 0.3, -0.1])
def test_schedule_rejects(bad):
    with pytest.raises(ValueError):
        epsilon_schedule(bad)


# ---------------------------------------------------------------- ancilla projector


def test_p_epsilon_projector_entries():
    assert np.allclose(p_epsilon_projector(0.75).matrix(),
                       [[2 / 3, np.sqrt(2) / 3], [np.sqrt(2) / 3, 1 / 3]])
    assert np.allclose(p_epsilon_projector(1.0).matrix(), 0.5 * np.ones((2, 2)))
    # off-diagonal entries shrink like sqrt(eps - 1/2)
    assert np.allclose(p_epsilon_projector(0.5 + 1e-12).matrix(), [[1, 0], [0, 0]], atol=2e-6)
    for e in (0.51, 0.7, 0.99, 1.0):
        m = p_epsilon_projector(e).matrix()
        assert np.allclose(m @ m, m) and np.allclose(m, m.conj().T)
        assert np.trace(m).real == pytest.approx(1.0)
    for bad in (0.5, 0.2, 1.01):
        with pytest.raises(ValueError):
            p_epsilon_projector(bad)


@given(st.floats(0.501, 1.0), st.floats(0.0, 1.0))
@settings(max_examples=40, deadline=None)
def test_ancilla_reduce_rule(eps, p):
    qs = extend_with_ancilla(engineered_system(p), 1, p_epsilon_projector(eps))
    assert outcome_probability(qs).p_E == pytest.approx(p / (2 * eps), abs=1e-12)


# ---------------------------------------------------------------- planning


def test_separator_regimes():
    plan = build_separator(SeparablePromise(0, 0.5))
    assert [s.kind for s in plan.stages] == ["b_star"]
    assert plan.stages[0].theta == pytest.approx(np.pi / 2)
    assert plan.ledger.rows == ((0.5, 0.0), (pytest.approx(1.0), 0.0))
    assert plan.query_count == 3

    plan = build_separator(SeparablePromise(1 / 3, 2 / 3))
    assert [s.kind for s in plan.stages] == ["ancilla_reduce", "b_star"]
    assert plan.ledger.good == pytest.approx([2 / 3, 0.5, 1.0])
    assert plan.ledger.bad == pytest.approx([1 / 3, 0.25, 0.8125])

    plan = build_separator(SeparablePromise(0, 0.01))
    assert [s.kind for s in plan.stages] == ["b_star", "b_star", "ancilla_reduce", "b_star"]
    assert plan.stages[2].epsilon == pytest.approx(np.sin(9 * np.arcsin(0.1)) ** 2)
    assert plan.ledger.final[0] == pytest.approx(1.0, abs=1e-12)

    assert build_separator(SeparablePromise(0.2, 1.0)).stages == ()


def test_worked_example_stages_and_ledger():
    plan = build_perfect_distinguisher(SeparablePromise(1 / 3, 2 / 3))
    kinds = [s.kind for s in plan.stages]
    assert kinds == ["ancilla_reduce", "b_star", "swap", "b_star", "ancilla_reduce", "b_star", "relabel"]
    assert plan.stages[3].theta == pytest.approx(np.pi)
    assert plan.ledger.bad == pytest.approx(TRAJECTORY_BAD, abs=1e-12)
    assert plan.ledger.final == pytest.approx((1.0, 0.0), abs=1e-12)
    assert plan.query_count == 27 == query_count(plan)
    assert plan.is_perfect


def test_trivial_and_one_sided_perfect_plans():
    plan = build_perfect_distinguisher(SeparablePromise(0, 1))
    assert plan.stages == () and plan.query_count == 1 == query_count(plan)
    plan = build_perfect_distinguisher(SeparablePromise(0, 0.5))
    assert [s.kind for s in plan.stages] == ["b_star", "swap", "relabel"]
    plan = build_perfect_distinguisher(SeparablePromise(0.4, 1.0))
    assert plan.stages[0].kind == "swap"  # first separator skipped


def test_ledger_rules_match_stage_definitions():
    for st_, p in [(BStar(0.3), 0.3), (BStar(0.1), 0.17), (AncillaReduce(0.8), 0.5), (Swap(), 0.2)]:
        if isinstance(st_, BStar):
            expect = p * delta_gain_equal_phases(st_.theta, p)
        elif isinstance(st_, AncillaReduce):
            expect = p / 1.6
        else:
            expect = 0.8
        assert st_.predict(p) == pytest.approx(expect, abs=1e-12)
    with pytest.raises(ValueError):
        AncillaReduce(0.4)
    with pytest.raises(ValueError):
        BStar(0.0)


@given(st.floats(1e-4, 0.999), st.floats(0.0, 1.0))
@settings(max_examples=100, deadline=None)
def test_every_plan_is_perfect_and_zero_preserving(eps, frac):
    delta = 0.0 if frac < 0.3 else eps * frac * 0.95
    plan = build_perfect_distinguisher(SeparablePromise(delta, eps))
    assert plan.ledger.final[0] == pytest.approx(1.0, abs=1e-7)
    assert plan.ledger.final[1] == pytest.approx(0.0, abs=1e-7)
    sep = build_separator(SeparablePromise(delta, eps))
    if delta == 0.0:
        assert max(sep.ledger.bad) <= 1e-12
        assert all(min(r) <= 1e-12 for r in plan.ledger.rows)
    else:
        assert min(sep.ledger.bad) > 0


def test_collapsed_sides_raise():
    with pytest.raises(InvalidPromiseError):
        build_perfect_distinguisher(SeparablePromise(0.3, 0.3))


# ---------------------------------------------------------------- simulation


def test_ledger_matches_simulation_on_random_promises():
    rng = np.random.default_rng(2024)
    for _ in range(50):
        pr = random_promise(rng)
        plan = build_perfect_distinguisher(pr)
        for col, p in ((0, pr.epsilon), (1, pr.delta)):
            sim = trace_plan(plan, engineered_system(p))
            ledger = [r[col] for r in plan.ledger.rows]
            assert np.max(np.abs(np.array(sim) - ledger)) < 1e-7, (pr, col)
        assert sim[-1] == pytest.approx(0.0, abs=1e-7)


def test_materialized_template_against_dense_oracle():
    plan = build_perfect_distinguisher(SeparablePromise(0.2, 0.7))
    qs = engineered_system(0.7, padding=1)
    template = materialize(plan, qs.input, qs.measurement.projector_E)
    bound = template.replace(bindings={"C": qs.circuit})
    assert oracles.prob_E(bound) == pytest.approx(1.0, abs=1e-9)
    assert template.circuit.call_count("C") == plan.query_count


def test_apply_plan_examples():
    plan = build_perfect_distinguisher(SeparablePromise(1 / 3, 2 / 3))
    assert outcome_probability(apply_plan(plan, engineered_system(2 / 3))).p_E == pytest.approx(1, abs=1e-7)
    assert outcome_probability(apply_plan(plan, engineered_system(1 / 3))).p_E == pytest.approx(0, abs=1e-7)
    ident = build_perfect_distinguisher(SeparablePromise(0, 1))
    qs = engineered_system(1.0)
    assert outcome_probability(apply_plan(ident, qs)).p_E == pytest.approx(1.0)


def test_apply_plan_rejects_off_promise_system():
    plan = build_perfect_distinguisher(SeparablePromise(1 / 3, 2 / 3))
    with pytest.raises(PromiseViolation):
        apply_plan(plan, engineered_system(0.5))


def test_apply_plan_detects_ledger_drift():
    plan = build_separator(SeparablePromise(0, 0.5))
    rows = list(plan.ledger.rows)
    rows[-1] = (0.99, 0.0)
    tampered = AmplificationPlan(plan.promise, plan.stages, ProbabilityLedger(tuple(rows)))
    with pytest.raises(VerificationError, match="stage 1"):
        apply_plan(tampered, engineered_system(0.5))


def test_apply_plan_on_system_with_own_slot_named_c():
    inner = engineered_system(0.5)
    outer = QuantumSystem(inner.input, sk.Circuit(1, (sk.BlackBox("C", (0,)),)), inner.measurement,
                          {"C": inner.circuit})
    plan = build_separator(SeparablePromise(0, 0.5))
    assert outcome_probability(apply_plan(plan, outer)).p_E == pytest.approx(1.0, abs=1e-9)


def test_uniform_materialization_agrees_with_direct():
    plan = build_perfect_distinguisher(SeparablePromise(0.25, 0.6))
    fam = uz.OrthonormalFamily((sk.basis_state(2, 0), sk.basis_state(2, 1)))
    bmap = uz.basis_map(fam)
    # a 2-qubit system whose E-probability is 0.6 on |00>
    b = np.arcsin(np.sqrt(0.6))
    c = sk.Circuit(2).gate("RY", 0, params=[2 * b]).gate("CX", 0, 1)
    qs = QuantumSystem(sk.basis_state(2, 0), c, Measurement2(sk.basis_projector(2, 0, 1)))
    direct = trace_plan(plan, qs)
    uniform = trace_plan(plan, qs, uniform=bmap)
    assert np.allclose(direct, uniform, atol=1e-9)


# ---------------------------------------------------------------- iterative form, counts


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_iterative_equivalence(k):
    rng = np.random.default_rng(k)
    c = sk.Circuit(2, (sk.MatrixGate(sk.random_unitary(4, rng), (0, 1)),))
    qs = QuantumSystem(sk.random_state(2, rng), c, Measurement2(sk.basis_projector(2, 1, 0)))
    circ, dev = iterative_equivalent(qs, k)
    assert dev < 1e-9
    cm = sk.circuit_matrix(c)
    s_psi = np.eye(4) - 2 * np.outer(qs.input, qs.input.conj())
    s_p = np.eye(4) - 2 * qs.measurement.projector_E.matrix()
    q = cm @ s_psi @ cm.conj().T @ s_p
    assert np.allclose(q, q_matrix(qs))
    expect = np.linalg.matrix_power(q, (3 ** k - 1) // 2) @ cm
    assert np.max(np.abs(sk.circuit_matrix(circ) - expect)) < 1e-9


def test_iterative_equivalence_three_qubits():
    rng = np.random.default_rng(33)
    c = sk.Circuit(3, (sk.MatrixGate(sk.random_unitary(8, rng), (0, 1, 2)),))
    qs = QuantumSystem(sk.basis_state(3, 0), c, Measurement2(sk.basis_projector(3, 2, 1)))
    assert iterative_equivalent(qs, 3)[1] < 1e-9
    with pytest.raises(ValueError):
        iterative_equivalent(qs, 0)


@pytest.mark.parametrize("eps", [1e-2, 1e-3, 1e-4, np.sin(np.pi / 18) ** 2, 0.2, 0.05])
def test_query_count_bound(eps):
    plan = build_perfect_distinguisher(SeparablePromise(0, eps))
    beta = np.arcsin(np.sqrt(eps))
    n_bstar = sum(s.kind == "b_star" for s in plan.stages)
    assert plan.query_count == 3 ** n_bstar == query_count(plan)
    assert plan.query_count <= np.ceil(1 + np.pi / (3 * beta)) * 4.5
