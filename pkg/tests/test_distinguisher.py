import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from exactamp import statekit as sk
from exactamp.distinguisher import (build_circuit_distinguisher, decide, eigenphase_problem,
                                    fault_detect, minimize_on_simplex, optimal_input,
                                    overlap_epsilon, project_simplex, solve)
from exactamp.errors import DimensionError, IndistinguishableError, PromiseViolation

import oracles

PLUS = np.array([1, 1]) / np.sqrt(2)


def gate(name, n=1, *targets, params=()):
    return sk.Circuit(n).gate(name, *(targets or (0,)), params=params)


def unitary_circuit(u):
    n = sk.qubits_of(len(u))
    return sk.Circuit(n, (sk.MatrixGate(u, tuple(range(n))),))


def test_overlap_examples():
    assert overlap_epsilon(gate("H"), gate("H"), PLUS) == pytest.approx(0)
    assert overlap_epsilon(gate("I"), gate("X"), sk.basis_state(1, 0)) == pytest.approx(1)
    assert overlap_epsilon(gate("I"), gate("Z"), PLUS) == pytest.approx(1)
    with pytest.raises(DimensionError):
        overlap_epsilon(gate("I"), sk.Circuit(2).gate("I", 0), PLUS)


def test_distinguisher_examples():
    d = build_circuit_distinguisher(gate("I"), gate("Z"), PLUS)
    assert d.epsilon == 1.0 and d.plan.stages == ()
    assert decide(d, gate("Z")) == "is_C2" and decide(d, gate("I")) == "is_C1"

    d = build_circuit_distinguisher(gate("I"), gate("S"), PLUS)
    assert d.epsilon == pytest.approx(0.5)
    assert d.plan.promise.epsilon == pytest.approx(0.5)
    assert decide(d, gate("S")) == "is_C2" and decide(d, gate("I")) == "is_C1"
    # T gives p_E = sin^2(pi/8), inside neither promised value
    with pytest.raises(PromiseViolation):
        decide(d, gate("T"))
    with pytest.raises(IndistinguishableError):
        build_circuit_distinguisher(gate("H"), gate("H"), PLUS)


def test_adjoint_sites_see_the_black_box():
    # T and its inverse differ, so a plan that misplaced adjoints would misclassify
    d = build_circuit_distinguisher(gate("T"), gate("S"), PLUS)
    assert d.plan.query_count > 1
    assert decide(d, gate("S")) == "is_C2" and decide(d, gate("T")) == "is_C1"


def test_random_triples_never_misclassified():
    rng = np.random.default_rng(55)
    done = 0
    while done < 50:
        n = int(rng.integers(1, 4))
        c1 = unitary_circuit(sk.random_unitary(1 << n, rng))
        # perturb C1 so the separations spread over (0.05, 1]
        k = sk.random_unitary(1 << n, rng)
        mix = float(rng.uniform(0.1, 1.0))
        h = (k + k.conj().T) / 2
        w, v = np.linalg.eigh(h)
        c2 = unitary_circuit((v * np.exp(1j * mix * w)) @ v.conj().T @ sk.circuit_matrix(c1))
        phi = sk.random_state(n, rng)
        if overlap_epsilon(c1, c2, phi) < 0.05:
            continue
        d = build_circuit_distinguisher(c1, c2, phi)
        for box, want in ((c1, "is_C1"), (c2, "is_C2")):
            assert decide(d, box) == want
        # dense oracle on one side as a cross-check of the simulator
        if n == 1:
            qs = d.system(c2)
            from exactamp.amplifier import apply_plan
            assert oracles.prob_E(apply_plan(d.plan, qs, verify=False)) == pytest.approx(1.0, abs=1e-7)
        done += 1


# ---------------------------------------------------------------- optimal probe


def test_optimal_input_examples():
    phi, eps = optimal_input(gate("I"), gate("Z"))
    assert eps == pytest.approx(1.0)
    assert abs(np.vdot(PLUS, phi)) == pytest.approx(1.0)

    phi, eps = optimal_input(gate("I"), gate("PHASE", params=[np.pi / 2]))
    assert eps == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(IndistinguishableError):
        optimal_input(gate("H"), gate("H"))
    with pytest.raises(IndistinguishableError):
        optimal_input(gate("I"), unitary_circuit(np.exp(0.4j) * np.eye(2)))


def test_diag_phase_probe_grid_never_beats_half():
    c1, c2 = gate("I"), gate("PHASE", params=[np.pi / 2])
    grid = oracles.probe_grid(1, 1000, np.random.default_rng(0))
    best = max(overlap_epsilon(c1, c2, phi) for phi in grid)
    assert best <= 0.5 + 1e-12
    assert best == pytest.approx(0.5, abs=5e-3)  # lattice spacing


def test_dominates_probe_grid_and_matches_geometry():
    rng = np.random.default_rng(77)
    for trial in range(20):
        n = 1 + trial % 2
        c1 = unitary_circuit(sk.random_unitary(1 << n, rng))
        c2 = unitary_circuit(sk.random_unitary(1 << n, rng))
        phi, eps = optimal_input(c1, c2, seed=trial)
        grid = oracles.probe_grid(n, 1000, rng)
        best = max(overlap_epsilon(c1, c2, p) for p in grid)
        assert eps >= best - 1e-4
        assert overlap_epsilon(c1, c2, phi) == pytest.approx(eps, abs=1e-9)
        s = sk.circuit_matrix(c1).conj().T @ sk.circuit_matrix(c2)
        exact = 1 - oracles.closest_hull_distance_sq(np.angle(np.linalg.eigvals(s)))
        assert eps == pytest.approx(exact, abs=1e-6)


def test_objective_is_overlap_at_probe():
    rng = np.random.default_rng(8)
    u1, u2 = sk.random_unitary(4, rng), sk.random_unitary(4, rng)
    prob = solve(eigenphase_problem(u1, u2))
    s = u1.conj().T @ u2
    phi = prob.probe()
    assert np.sum(prob.weights) == pytest.approx(1.0) and np.all(prob.weights >= 0)
    assert prob.objective(prob.weights) == pytest.approx(abs(np.vdot(phi, s @ phi)) ** 2, abs=1e-9)


def test_degenerate_phases_are_merged():
    s = np.diag([1, 1, -1, 1j])
    prob = eigenphase_problem(np.eye(4), s)
    assert len(prob.phases) == 3


@given(st.lists(st.floats(-5, 5), min_size=1, max_size=8))
@settings(max_examples=50, deadline=None)
def test_simplex_projection(v):
    v = np.array(v)
    x = project_simplex(v)[0]
    assert np.all(x >= 0) and x.sum() == pytest.approx(1.0)
    rng = np.random.default_rng(0)
    for y in rng.dirichlet(np.ones(len(v)), size=20):
        assert np.linalg.norm(x - v) <= np.linalg.norm(y - v) + 1e-12


@given(st.lists(st.floats(-np.pi, np.pi), min_size=3, max_size=7))
@settings(max_examples=40, deadline=None)
def test_minimizer_reaches_hull_distance(phases):
    g = np.cos(np.subtract.outer(phases, phases))
    c = minimize_on_simplex(g)
    assert c @ g @ c == pytest.approx(oracles.closest_hull_distance_sq(phases), abs=1e-6)


# ---------------------------------------------------------------- fault detection


def test_fault_detect_cnot_stuck_x():
    ref = sk.Circuit(2).gate("CX", 0, 1)
    fault = ref.gate("X", 1)
    assert fault_detect(ref, fault, ref) == "fault_free"
    assert fault_detect(ref, fault, fault) == "faulty"
    with pytest.raises(IndistinguishableError):
        fault_detect(ref, ref, ref)


def test_fault_detect_small_rotation_fault():
    ref = sk.Circuit(2).gate("H", 0).gate("CX", 0, 1)
    fault = ref.gate("RZ", 1, params=[0.3])
    assert fault_detect(ref, fault, fault) == "faulty"
    assert fault_detect(ref, fault, ref) == "fault_free"
