from dataclasses import replace

import numpy as np
import pytest
from conftest import LIBRARY, TIGHT, make_scenario
from hypothesis import given, settings
from hypothesis import strategies as st

from tdho.classical import (
    evolve_state,
    gamma_sigma_from_beta,
    linear_invariant,
    solve_beta,
    solve_gamma,
    solve_sigma,
    wronskian,
)
from tdho.quantum import (
    LinearOperator,
    QuadraticOperator,
    antisymmetric_product,
    check_quantum_invariance,
    check_quantum_products,
    heisenberg_propagator,
    linear_invariant_op,
    multiply,
    pull_back,
    pulled_back_series,
    quad_invariant_op,
    symmetric_product,
)

SQRT_HALF = 1 / np.sqrt(2)
Q = LinearOperator(bq=1)
P = LinearOperator(bp=1)
ROTATION = np.array([[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])

finite = st.floats(-3, 3, allow_nan=False)
cplx = st.builds(complex, finite, finite)
linear_ops = st.builds(LinearOperator, cplx, cplx, cplx)


def assert_ops_equal(a, b, tol=0.0):
    assert np.max(np.abs(a.coefficients() - b.coefficients())) <= tol


# ----------------------------------------------------------------- truncated-matrix oracle


def ladder_matrices(dim, hbar):
    a = np.diag(np.sqrt(np.arange(1, dim)), k=1).astype(complex)
    ad = a.conj().T
    q = np.sqrt(hbar / 2) * (a + ad)
    p = 1j * np.sqrt(hbar / 2) * (ad - a)
    return q, p


def as_matrix(op, q, p):
    eye = np.eye(q.shape[0])
    if isinstance(op, LinearOperator):
        return op.bq * q + op.bp * p + op.b0 * eye
    return (op.aqq * q @ q + op.app * p @ p + op.asym * 0.5 * (q @ p + p @ q)
            + op.bq * q + op.bp * p + op.b0 * eye)


@pytest.mark.parametrize("hbar", [1.0, 0.37])
def test_multiply_against_truncated_matrices(hbar):
    rng = np.random.default_rng(7)
    q, p = ladder_matrices(40, hbar)
    block = slice(0, 30)  # truncation only corrupts the highest levels
    for _ in range(20):
        c = rng.normal(size=(2, 3)) + 1j * rng.normal(size=(2, 3))
        l1, l2 = LinearOperator(*c[0]), LinearOperator(*c[1])
        m1, m2 = as_matrix(l1, q, p), as_matrix(l2, q, p)
        product = as_matrix(multiply(l1, l2, hbar), q, p)
        assert np.max(np.abs((m1 @ m2 - product)[block, block])) <= 1e-10
        commutator = (m1 @ m2 - m2 @ m1)[block, block]
        a1, b1 = l1.bq, l1.bp
        a2, b2 = l2.bq, l2.bp
        expected = (a1 * b2 - b1 * a2) * 1j * hbar * np.eye(30)
        assert np.max(np.abs(commutator - expected)) <= 1e-10
        coeff_diff = multiply(l1, l2, hbar) - multiply(l2, l1, hbar)
        assert np.max(np.abs(coeff_diff.coefficients()[:5])) == 0
        assert abs(coeff_diff.b0 - (a1 * b2 - b1 * a2) * 1j * hbar) <= 1e-12


# ----------------------------------------------------------------- algebra


def test_multiply_q_p():
    op = multiply(Q, P, hbar=1.0)
    assert_ops_equal(op, QuadraticOperator(asym=1, b0=0.5j))


def test_multiply_commuting_factors():
    l = LinearOperator(bq=1, b0=1)
    assert_ops_equal(multiply(l, l, hbar=3.0), QuadraticOperator(aqq=1, bq=2, b0=1))


def test_symmetric_product_q_p():
    assert_ops_equal(symmetric_product(Q, P), QuadraticOperator(asym=1))


@settings(max_examples=200, deadline=None)
@given(l1=linear_ops, l2=linear_ops, hbar=st.floats(0.01, 200))
def test_product_identities(l1, l2, hbar):
    sym = symmetric_product(l1, l2, hbar)
    total = multiply(l1, l2, hbar) + multiply(l2, l1, hbar)
    assert np.array_equal(total.coefficients(), sym.scale(2).coefficients())
    assert np.array_equal(multiply(l1, l2, hbar).adjoint().coefficients(),
                          multiply(l2.adjoint(), l1.adjoint(), hbar).coefficients())
    anti = antisymmetric_product(l1, l2, hbar)
    assert np.all(anti.coefficients()[:5] == 0)
    assert abs(anti.b0 - (l1.bq * l2.bp - l1.bp * l2.bq) * 0.5j * hbar) <= 1e-12 * (1 + abs(anti.b0))


@settings(max_examples=100, deadline=None)
@given(l1=linear_ops, l2=linear_ops)
def test_symmetric_product_is_hbar_independent(l1, l2):
    assert_ops_equal(symmetric_product(l1, l2, 1.0), symmetric_product(l1, l2, 137.0), tol=1e-12)


@given(l=linear_ops)
def test_adjoint_involution(l):
    assert l.adjoint().adjoint() == l
    quad = multiply(l, l.adjoint())
    assert quad.adjoint().adjoint() == quad


def test_self_adjointness():
    assert QuadraticOperator(1, 2, 3, 4, 5, 6).is_self_adjoint()
    assert not QuadraticOperator(b0=1j).is_self_adjoint()
    l = LinearOperator(1 + 2j, 0.5 - 1j, 0.3j)
    # A^dagger A is self-adjoint up to rounding of the product terms
    op = symmetric_product(l.adjoint(), l)
    assert np.max(np.abs(op.coefficients().imag)) <= 1e-15


# ----------------------------------------------------------------- pull back


def test_pull_back_identity():
    op = QuadraticOperator(1 + 1j, 2, 3, 4, 5j, 6)
    assert_ops_equal(pull_back(op, np.eye(3)), op)
    lin = LinearOperator(1, 2j, 3)
    assert pull_back(lin, np.eye(3)) == lin


def test_pull_back_rotation():
    assert_ops_equal(pull_back(QuadraticOperator(aqq=1), ROTATION), QuadraticOperator(app=1))
    assert_ops_equal(pull_back(QuadraticOperator(app=1), ROTATION), QuadraticOperator(aqq=1))


def test_pull_back_affine_shift():
    S = np.array([[1.0, 0.0, 2.0], [0.0, 1.0, -1.0], [0.0, 0.0, 1.0]])
    # q -> q + 2, so q^2 -> q^2 + 4 q + 4
    assert_ops_equal(pull_back(QuadraticOperator(aqq=1), S), QuadraticOperator(aqq=1, bq=4, b0=4))
    assert pull_back(P, S) == LinearOperator(0, 1, -1)


def test_pull_back_rejects_bad_matrix():
    with pytest.raises(ValueError):
        pull_back(Q, np.eye(2))
    with pytest.raises(ValueError):
        pull_back(Q, np.array([[1.0, 0, 0], [0, 1, 0], [1, 0, 1]]))
    with pytest.raises(TypeError):
        pull_back("q", np.eye(3))


def unimodular(rng):
    a, b, c = rng.normal(size=3)
    d = (1 + b * c) / a
    return np.array([[a, b, rng.normal()], [c, d, rng.normal()], [0.0, 0.0, 1.0]])


@settings(max_examples=100, deadline=None)
@given(l1=linear_ops, l2=linear_ops, seed=st.integers(0, 2**32 - 1), hbar=st.floats(0.1, 10))
def test_pull_back_is_multiplicative(l1, l2, seed, hbar):
    S = unimodular(np.random.default_rng(seed))
    if np.max(np.abs(S)) > 20:
        return
    lhs = pull_back(multiply(l1, l2, hbar), S)
    rhs = multiply(pull_back(l1, S), pull_back(l2, S), hbar)
    scale = 1 + np.max(np.abs(lhs.coefficients()))
    assert np.max(np.abs(lhs.coefficients() - rhs.coefficients())) <= 1e-12 * scale


def test_pull_back_needs_unit_determinant_for_products():
    S = np.diag([2.0, 1.0, 1.0])
    lhs = pull_back(multiply(Q, P), S)
    rhs = multiply(pull_back(Q, S), pull_back(P, S))
    assert abs(lhs.b0 - rhs.b0) > 0.1


# ----------------------------------------------------------------- propagator


def test_propagator_quarter_turn():
    sc = make_scenario("1", "0", t1=np.pi / 2, samples=3)
    prop = heisenberg_propagator(sc, TIGHT)
    assert np.array_equal(prop.matrices[0], np.eye(3))
    assert np.max(np.abs(prop.matrices[-1] - ROTATION)) <= 1e-9


def test_propagator_unforced_third_column():
    sc = make_scenario("1 + 0.1*t", "0", t1=5.0, samples=51)
    prop = heisenberg_propagator(sc, TIGHT)
    assert np.all(prop.matrices[:, :, 2] == np.array([0.0, 0.0, 1.0]))
    assert np.all(prop.matrices[:, 2, :2] == 0)


def test_propagator_liouville_chirp():
    prop = heisenberg_propagator(make_scenario("1 + 0.1*t", "0"), TIGHT)
    assert np.max(np.abs(prop.determinants() - 1)) <= 1e-9


def test_propagator_matches_classical_flow():
    sc = make_scenario("1 + 0.1*t", "sin(t)", t1=10.0, samples=201)
    prop = heisenberg_propagator(sc, TIGHT)
    traj = evolve_state(sc, 0.7, -1.1, TIGHT)
    mapped = prop.matrices @ np.array([0.7, -1.1, 1.0])
    assert np.max(np.abs(mapped[:, 0] - traj.q)) <= 1e-8
    assert np.max(np.abs(mapped[:, 1] - traj.p)) <= 1e-8
    assert np.array_equal(prop.at(sc.times[7]), prop.matrices[7])
    with pytest.raises(ValueError):
        prop.at(0.123456)


# ----------------------------------------------------------------- invariant operators


def test_quad_op_constant_case():
    sc = make_scenario("1", "0", t1=2.0, samples=21)
    g = solve_gamma(sc, 1, 0, 0, TIGHT)
    s = solve_sigma(sc, g, 0, 0, TIGHT)
    op = quad_invariant_op(g, s, sc, 1.0)
    assert_ops_equal(op, QuadraticOperator(aqq=0.5, app=0.5), tol=1e-12)
    assert op.is_self_adjoint()


def test_linear_op_at_t0():
    sc = make_scenario("1", "1", t1=2.0, samples=21)
    op = linear_invariant_op(solve_beta(sc, 0, 1, TIGHT), 0.0)
    assert op == LinearOperator(-1, 0, 0)


def test_quad_op_real_inputs_self_adjoint():
    sc = make_scenario("1 + 0.1*t", "sin(t)", t1=4.0, samples=41)
    g = solve_gamma(sc, 1.0, 0.3, -0.2, TIGHT)
    s = solve_sigma(sc, g, 0.2, 0.1, TIGHT)
    assert all(quad_invariant_op(g, s, sc, t).is_self_adjoint() for t in sc.times)


def test_operator_evaluation_matches_classical_invariant():
    sc = make_scenario("1 + 0.1*t", "sin(t)", t1=4.0, samples=41)
    beta = solve_beta(sc, 0.3, 1 + 1j, TIGHT)
    traj = evolve_state(sc, 1.0, 0.5, TIGHT)
    classical = linear_invariant(beta, traj)
    quantum = [linear_invariant_op(beta, t).evaluate(q, p) for t, q, p in zip(sc.times, traj.q, traj.p)]
    assert np.max(np.abs(np.array(quantum) - classical)) <= 1e-15


# ----------------------------------------------------------------- invariance checks


def test_quantum_invariance_plane_wave():
    sc = make_scenario("1", "0")
    beta = solve_beta(sc, SQRT_HALF, -1j * SQRT_HALF, TIGHT)
    traj = evolve_state(sc, 1.0, 0.0, TIGHT)
    prop = heisenberg_propagator(sc, TIGHT)
    rep = check_quantum_invariance(prop, sc, beta=beta, traj=traj, hbar=1.0, threshold=1e-8)
    assert rep.passed, rep.failures()
    anti = rep["antisymmetric scalar + W i hbar / 2"]
    assert anti.drift <= 1e-9
    assert rep["antisymmetric non-scalar part"].drift == 0


@pytest.mark.parametrize("omega_sq, force", LIBRARY.values(), ids=LIBRARY.keys())
def test_quantum_invariance_library(omega_sq, force):
    sc = make_scenario(omega_sq, force)
    beta = solve_beta(sc, 0, 1, TIGHT)
    g = solve_gamma(sc, 1, 0, 0, TIGHT)
    s = solve_sigma(sc, g, 0, 0, TIGHT)
    prop = heisenberg_propagator(sc, TIGHT)
    rep = check_quantum_invariance(prop, sc, beta=beta, gamma=g, sigma=s, traj=evolve_state(sc, -0.3, 1.2, TIGHT),
                                   include_products=False)
    assert rep.passed, rep.failures()


def test_antisymmetric_product_value_and_hbar():
    sc = make_scenario("1 + 0.1*t", "sin(t)", t1=5.0, samples=101)
    beta = solve_beta(sc, 0.4 + 0.2j, 1 - 0.5j, TIGHT)
    W = wronskian(beta.conjugate(), beta)[0]
    for hbar in (1.0, 2.5):
        for t in sc.times[::25]:
            anti = antisymmetric_product(linear_invariant_op(beta.conjugate(), t), linear_invariant_op(beta, t), hbar)
            assert np.all(anti.coefficients()[:5] == 0)
            assert abs(anti.b0 + 0.5 * W * 1j * hbar) <= 1e-9
        assert check_quantum_products(beta, sc, hbar).passed


def test_symmetric_product_equals_quad_op_from_beta():
    sc = make_scenario("1 + 0.1*t", "sin(t)")
    beta = solve_beta(sc, 0, 1, TIGHT)
    g, s = gamma_sigma_from_beta(beta)
    for t in sc.times[::100]:
        sym = symmetric_product(linear_invariant_op(beta.conjugate(), t), linear_invariant_op(beta, t))
        assert_ops_equal(sym, quad_invariant_op(g, s, sc, t), tol=1e-8)


def test_perturbed_beta_breaks_invariance():
    sc = make_scenario("1", "0")
    beta = solve_beta(sc, SQRT_HALF, -1j * SQRT_HALF, TIGHT)
    broken = replace(beta, beta_dot=beta.beta_dot * 1.01)
    prop = heisenberg_propagator(sc, TIGHT)
    rep = check_quantum_invariance(prop, sc, beta=broken, hbar=1.0, threshold=1e-8, include_products=False)
    assert not rep.passed
    drift = rep["pulled-back I_L coefficients"].drift
    assert 1e-3 <= drift <= 1e-1


def test_pulled_back_series_shape():
    sc = make_scenario("1", "0", t1=2.0, samples=11)
    beta = solve_beta(sc, 0, 1, TIGHT)
    series = pulled_back_series(lambda t: linear_invariant_op(beta, t), heisenberg_propagator(sc, TIGHT))
    assert series.shape == (11, 3)
    assert np.max(np.abs(series - series[0])) <= 1e-9
