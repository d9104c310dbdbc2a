from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qrfm import blockenc as be
from qrfm import circuit as qc
from qrfm.ledger import ResourceLedger
from qrfm.oracles import CollocationGrid, ux_coordinate, uw_ub_from_ansatz


def _unitary_be(gate_circ, label=""):
    return be.from_unitary_circuit(gate_circ, label=label)


def test_single_term_lcu_is_identity_map():
    b = be.dilation_encoding(np.diag([0.2, -0.4]), alpha=1.0)
    out = be.lcu_combine([(1.0, b)])
    assert np.allclose(be.extract_block(out), np.diag([0.2, -0.4]))


def test_lcu_x_plus_z():
    ex = _unitary_be(qc.Circuit(1, (qc.x(0),)))
    ez = _unitary_be(qc.Circuit(1, (qc.z(0),)))
    out = be.lcu_combine([(0.5, ex), (0.5, ez)])
    X = np.array([[0, 1], [1, 0]])
    Z = np.diag([1, -1])
    assert np.isclose(out.alpha, 1.0)
    assert np.allclose(be.raw_block(out), (X + Z) / 2, atol=1e-10)


def test_lcu_uneven_complex_weights(rng):
    mats = [qc.circuit_to_unitary(qc.random_ansatz(2, s)) for s in range(3)]
    terms = [(c, _unitary_be(qc.Circuit(2, (qc.custom(m, [0, 1]),)))) for c, m in zip([0.3, -1.2j, 0.5 + 0.5j], mats)]
    out = be.lcu_combine(terms)
    ref = sum(c * m for (c, _), m in zip(terms, mats))
    assert np.isclose(out.alpha, sum(abs(c) for c, _ in terms))
    assert np.allclose(be.extract_block(out), ref, atol=1e-10)


def test_lcu_linear_on_encoded():
    b1 = be.from_matrix(np.diag([0.1, 0.2]), alpha=1.0)
    b2 = be.from_matrix(np.diag([-0.3, 0.4]), alpha=1.0)
    out = be.lcu_combine([(2.0, b1), (-0.5, b2)])
    assert np.allclose(out.dense(), 2.0 * b1.dense() - 0.5 * b2.dense())


def test_lcu_errors():
    with pytest.raises(ValueError):
        be.lcu_combine([])
    with pytest.raises(ValueError):
        be.lcu_combine([(1.0, be.identity_encoding(1)), (1.0, be.identity_encoding(2))])


def test_diag_project_off_diagonal_and_fixed_point():
    ex = _unitary_be(qc.Circuit(1, (qc.x(0),)))
    assert np.allclose(be.extract_block(be.diag_project(ex)), 0)
    ez = _unitary_be(qc.Circuit(1, (qc.z(0),)))
    assert np.allclose(be.extract_block(be.diag_project(ez)), np.diag([1, -1]))


def test_diag_project_random_two_qubit():
    c = qc.random_ansatz(2, 11)
    u = qc.circuit_to_unitary(c)
    out = be.diag_project(be.from_circuit(c, 0, target=u))
    assert np.allclose(be.extract_block(out), np.diag(np.diag(u)), atol=1e-10)
    twice = be.diag_project(out)
    assert np.allclose(twice.dense(), out.dense())


@pytest.mark.parametrize("A", [np.ones((2, 2)), np.eye(2)])
def test_oracle_to_be_small(A):
    o = be.dilation_encoding(A.ravel().astype(float), alpha=1.0)
    lifted = be.oracle_to_be(o, 1, 1)
    assert np.isclose(lifted.alpha, 2.0)
    assert np.allclose(be.raw_block(lifted), A / 2, atol=1e-12)
    assert np.allclose(be.extract_block(lifted), A, atol=1e-12)


def test_amplify_parameters_and_ledger():
    o = be.dilation_encoding(np.array([0.3, 0.1, -0.2, 0.25]), alpha=1.0)
    lifted = be.oracle_to_be(o, 1, 1)
    lifted = replace(lifted, epsilon=1e-3)
    led = ResourceLedger()
    amp = be.amplify(lifted, led)
    assert amp.alpha == 1.0 and amp.ancillas == lifted.ancillas + 1
    assert np.isclose(amp.epsilon, lifted.alpha * 1e-3)
    calls = led.snapshot()["calls"]
    assert calls["A"] == calls["A^dg"] == int(np.ceil(lifted.alpha))
    unit = be.amplify(be.identity_encoding(1), ResourceLedger())
    assert unit.alpha == 1.0 and unit.epsilon == 0.0 and unit.ancillas == 1


def test_extract_block_examples():
    eh = _unitary_be(qc.Circuit(1, (qc.h(0),)))
    assert np.allclose(be.extract_block(eh), np.array([[1, 1], [1, -1]]) / np.sqrt(2))
    uw, _, spec = uw_ub_from_ansatz(2, 5)
    blk = be.extract_block(uw)
    assert np.allclose(blk, np.diag(np.diag(blk)))
    assert np.all(np.abs(np.diag(blk)) <= 1 + 1e-12)
    ux = ux_coordinate(CollocationGrid.uniform_grid(2))
    assert np.allclose(np.diag(be.extract_block(ux)), [-1, -1 / 3, 1 / 3, 1])


def test_encoded_norm_invariant():
    with pytest.raises(ValueError):
        be.from_matrix(np.diag([2.0, 0.0]), alpha=1.0)


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=4, max_size=4), st.lists(st.floats(-1, 1), min_size=4, max_size=4))
def test_product_and_kron_of_dilations(a, b):
    ea = be.dilation_encoding(np.array(a), alpha=1.0)
    eb = be.dilation_encoding(np.array(b), alpha=1.0)
    assert np.allclose(be.extract_block(be.product(ea, eb)), np.diag(np.array(a) * np.array(b)), atol=1e-10)
    k = be.kron(be.dilation_encoding(np.array(a[:2]), alpha=1.0), eb)
    assert np.allclose(be.extract_block(k), np.kron(np.diag(a[:2]), np.diag(b)), atol=1e-10)
