import numpy as np
import pytest

from exactamp import statekit as sk
from exactamp import uniformizer as uz
from exactamp.derand import (HalfLayout, one_bit_fixture, derandomize_family,
                             derandomize_family_full, derandomize_oracle, direct_oracle_fixture,
                             erqp_half_transform, half_transform_verdicts, language_fixture,
                             masked_oracle_fixture, two_sided_oracle_fixture)
from exactamp.errors import InvalidPromiseError, PromiseViolation
from exactamp.systems import SeparablePromise, classify_separable, outcome_probability

import oracles

HALF = SeparablePromise(0, 0.5)


def closed_form_state(fixture, x):
    """Final state from the coefficient algebra with K = <psi0|psi0> + i <psi1|psi1>."""
    n, m = fixture.n, fixture.m
    psi = sk.circuit_matrix(fixture.circuit) @ fixture.input_state(x)
    half = len(psi) // 2
    psi0, psi1 = psi[:half], psi[half:]
    k = np.vdot(psi0, psi0) + 1j * np.vdot(psi1, psi1)
    qr = np.concatenate([(1 - (1 - 1j) * k) * psi0, (1j - (1 - 1j) * k) * psi1])
    return sk.tensor(sk.basis_state(n, x), qr, sk.basis_state(1, 0))


def five_factor_matrix(fixture):
    """C F S0 F C^dagger P C F from Kronecker products on [P | Q | R | anc]."""
    n, m = fixture.n, fixture.m
    lay = HalfLayout(n, m)
    tot = lay.total
    cm = sk.circuit_matrix(fixture.circuit)
    c = oracles.embed(cm, lay.q + lay.r, tot)
    f = np.eye(1 << tot)
    for k in range(n):
        f = oracles.controlled_x([k], n + k, tot) @ f
    p = oracles.single(np.diag([1, 1j]), lay.answer, tot)
    zero = np.zeros(1 << (n + m))
    zero[0] = 1
    s0_qr = np.eye(1 << (n + m)) - (1 - 1j) * np.outer(zero, zero)
    s0 = np.kron(np.eye(1 << n), np.kron(s0_qr, np.eye(2)))
    return c @ f @ s0 @ f @ c.conj().T @ p @ c @ f


def test_one_bit_fixture_states():
    fx = one_bit_fixture()
    assert classify_separable([fx.system(0), fx.system(1)], HALF) == ["low", "high"]
    circ = erqp_half_transform(fx)
    assert circ.qubit_count == 4
    out0 = sk.apply_circuit(circ, sk.basis_state(4, "0000"))
    out1 = sk.apply_circuit(circ, sk.basis_state(4, "1000"))
    # i |x>|0>|psi0>, psi0 = |0>; and (i - 1)|x>|1>|psi1>, psi1 = |1>/sqrt 2
    assert np.allclose(out0, 1j * sk.basis_state(4, "0000"), atol=1e-9)
    assert np.allclose(out1, (1j - 1) / np.sqrt(2) * sk.basis_state(4, "1110"), atol=1e-9)
    table = half_transform_verdicts(fx)
    assert not table["0"].accept and table["1"].accept


def test_operator_equals_five_factor_product():
    for fx in (one_bit_fixture(), language_fixture(2, {1, 2}, HALF), language_fixture(1, {0}, HALF, m=2)):
        circ = erqp_half_transform(fx)
        # the ancilla enters in |0>, so compare on that half of the columns
        diff = sk.circuit_matrix(circ)[:, ::2] - five_factor_matrix(fx)[:, ::2]
        assert np.max(np.abs(diff)) < 1e-9
        # the S0 ancilla always comes back to |0>
        lay = HalfLayout(fx.n, fx.m)
        for x in fx.inputs():
            out = sk.apply_circuit(circ, sk.basis_state(lay.total, x << (lay.total - fx.n)))
            assert np.sum(np.abs(out[1::2]) ** 2) < 1e-18


@pytest.mark.parametrize("n,members,m", [(1, {1}, 1), (2, {0, 3}, 1), (2, set(), 1), (3, {1, 4, 6}, 1), (1, {0}, 2)])
def test_half_transform_matches_closed_form(n, members, m):
    fx = language_fixture(n, members, HALF, m=m)
    circ = erqp_half_transform(fx)
    lay = HalfLayout(n, m)
    for x in fx.inputs():
        out = sk.apply_circuit(circ, sk.basis_state(lay.total, x << (lay.total - n)))
        assert np.allclose(out, closed_form_state(fx, x), atol=1e-9)
    table = half_transform_verdicts(fx)
    assert {int(k, 2) for k, v in table.items() if v.accept} == members


def test_half_transform_promise_check():
    with pytest.raises(InvalidPromiseError):
        erqp_half_transform(language_fixture(1, {1}, SeparablePromise(0, 0.4)))


def test_language_fixture_probabilities():
    fx = language_fixture(2, {1, 2}, SeparablePromise(0.1, 0.7), m=2)
    ps = [outcome_probability(fx.system(x)).p_E for x in fx.inputs()]
    assert ps == pytest.approx([0.1, 0.7, 0.7, 0.1])


def test_family_half_promise():
    circ, table = derandomize_family(language_fixture(2, {1, 2}, HALF))
    assert {k: v.accept for k, v in table.items()} == {"00": False, "01": True, "10": True, "11": False}
    for v in table.values():
        assert min(v.p_E, 1 - v.p_E) < 1e-7


def test_family_two_sided_shares_one_circuit():
    res = derandomize_family_full(language_fixture(1, {1}, SeparablePromise(1 / 3, 2 / 3)))
    assert res.plan.query_count == 27 == res.circuit.call_count("C")
    assert res.table["1"].accept and not res.table["0"].accept
    for t in res.templates[1:]:
        assert sk.structural_diff(res.templates[0].circuit, t.circuit) == []


def test_family_three_input_bits():
    circ, table = derandomize_family(language_fixture(3, {0, 5, 7}, SeparablePromise(0.2, 0.6)))
    assert {int(k, 2) for k, v in table.items() if v.accept} == {0, 5, 7}


def test_family_promise_violation_names_input():
    fx = language_fixture(2, {1}, HALF, overrides={3: 0.4})
    with pytest.raises(PromiseViolation) as err:
        derandomize_family(fx)
    assert err.value.offenders[0][0] == "11"
    assert err.value.offenders[0][1] == pytest.approx(0.4)


def test_oracle_direct():
    template, table = derandomize_oracle(direct_oracle_fixture([0, 1, 1]), SeparablePromise(0, 1))
    assert [table[x].accept for x in range(3)] == [False, True, True]


def test_oracle_masked_half():
    truth = [0, 1, 1, 0, 1]
    template, table = derandomize_oracle(masked_oracle_fixture(truth), HALF)
    assert [int(table[x].accept) for x in range(5)] == truth
    assert template.call_count("U") == 3


def test_oracle_two_sided_uniform():
    truth = [1, 0, 0, 1]
    pr = SeparablePromise(1 / 3, 2 / 3)
    fx = two_sided_oracle_fixture(truth, pr)
    template, table = derandomize_oracle(fx, pr)
    assert [int(table[x].accept) for x in range(4)] == truth
    concrete = [template.bind(U=fx.oracle(x)) for x in range(4)]
    sites = set(template.call_positions("U"))
    diff = set(sk.structural_diff(concrete[0], concrete[1]))
    assert diff and diff <= sites


def test_oracle_promise_violation():
    with pytest.raises(PromiseViolation):
        derandomize_oracle(masked_oracle_fixture([0, 1]), SeparablePromise(0, 0.4))


def test_family_inputs_are_a_valid_basis_map():
    fx = language_fixture(2, {1}, HALF)
    fam = uz.OrthonormalFamily(tuple(fx.input_state(x) for x in fx.inputs()))
    assert uz.verify_uniform(uz.basis_map(fam), np.pi / 2) < 1e-9
