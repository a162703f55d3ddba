import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chargedspin.cliffalg import (build_clifford_rep, chirality_apply,
                                  clifford_mul, hermitian_inner,
                                  momentum_charge_operator)
from chargedspin.errors import DimensionTooLargeError, InvalidDimensionError

DIMS = list(range(2, 9))
TOL = 1e-13


@pytest.fixture(scope="module")
def reps():
    return {n: build_clifford_rep(n) for n in DIMS}


@pytest.mark.parametrize("n", DIMS)
def test_fiber_dimension(n, reps):
    rep = reps[n]
    expect = 2 ** (n // 2) * (2 if n % 2 else 1)
    assert rep.N == expect
    assert rep.gammas.shape == (n, rep.N, rep.N)


@pytest.mark.parametrize("n", DIMS)
def test_clifford_relation(n, reps):
    g = reps[n].gammas
    acom = np.einsum("aij,bjk->abik", g, g) + np.einsum("bij,ajk->abik", g, g)
    target = -2.0 * np.eye(reps[n].N) * np.eye(n)[:, :, None, None]
    assert np.abs(acom - target).max() < TOL


@pytest.mark.parametrize("n", DIMS)
def test_generators_anti_hermitian(n, reps):
    g = reps[n].gammas
    assert np.abs(g + np.conj(np.swapaxes(g, -1, -2))).max() < TOL


@pytest.mark.parametrize("n", DIMS)
def test_chirality_properties(n, reps):
    # the four defining properties: self-adjoint, involutive, anticommutes
    # with Clifford multiplication, and (constancy stands in for parallel)
    rep = reps[n]
    chi = rep.chi
    assert np.abs(chi - chi.conj().T).max() < TOL
    assert np.abs(chi @ chi - np.eye(rep.N)).max() < TOL
    for a in range(n):
        assert np.abs(chi @ rep.gammas[a] + rep.gammas[a] @ chi).max() < TOL


@pytest.mark.parametrize("n", [3, 5, 7])
def test_odd_dimension_doubling_structure(n, reps):
    rep = reps[n]
    half = rep.N // 2
    assert rep.chirality_phase == "swap"
    # block-diagonal (X, -X) action, chi swaps the halves
    assert np.abs(rep.gammas[:, :half, half:]).max() == 0.0
    assert np.abs(rep.gammas[:, half:, :half]).max() == 0.0
    assert np.abs(rep.gammas[:, :half, :half]
                  + rep.gammas[:, half:, half:]).max() < TOL
    assert np.abs(rep.chi[:half, half:] - np.eye(half)).max() < TOL


def test_deterministic_construction():
    a = build_clifford_rep(4)
    b = build_clifford_rep(4)
    assert np.array_equal(a.gammas, b.gammas)
    assert np.array_equal(a.chi, b.chi)
    assert a.chirality_phase == b.chirality_phase


def test_rejects_bad_dimension():
    with pytest.raises(InvalidDimensionError):
        build_clifford_rep(1)
    with pytest.raises(InvalidDimensionError):
        build_clifford_rep(0)
    with pytest.raises(DimensionTooLargeError):
        build_clifford_rep(30)


def test_clifford_mul_matches_matrix_action(reps):
    rep = reps[3]
    rng = np.random.default_rng(11)
    X = rng.standard_normal(3)
    phi = rng.standard_normal(rep.N) + 1j * rng.standard_normal(rep.N)
    direct = sum(X[a] * rep.gammas[a] for a in range(3)) @ phi
    assert np.abs(clifford_mul(rep, X, phi) - direct).max() < TOL


def test_clifford_mul_broadcasts(reps):
    rep = reps[4]
    rng = np.random.default_rng(5)
    X = rng.standard_normal((6, 7, 4))
    phi = rng.standard_normal((6, 7, rep.N)) + 0j
    out = clifford_mul(rep, X, phi)
    assert out.shape == (6, 7, rep.N)
    one = clifford_mul(rep, X[2, 3], phi[2, 3])
    assert np.abs(out[2, 3] - one).max() < TOL


@given(st.integers(min_value=2, max_value=7), st.integers(0, 2 ** 31 - 1))
@settings(max_examples=40, deadline=None)
def test_clifford_square_is_minus_norm(n, seed):
    # X.X.phi = -|X|^2 phi for every vector and spinor
    rep = build_clifford_rep(n)
    rng = np.random.default_rng(seed)
    X = rng.standard_normal(n)
    phi = rng.standard_normal(rep.N) + 1j * rng.standard_normal(rep.N)
    twice = clifford_mul(rep, X, clifford_mul(rep, X, phi))
    assert np.abs(twice + np.dot(X, X) * phi).max() < 1e-10 * (1 + np.abs(phi).max())


@given(st.integers(min_value=2, max_value=7), st.integers(0, 2 ** 31 - 1))
@settings(max_examples=40, deadline=None)
def test_clifford_action_skew_and_chi_selfadjoint(n, seed):
    # <X.phi, psi> = -<phi, X.psi> and <chi phi, psi> = <phi, chi psi>
    rep = build_clifford_rep(n)
    rng = np.random.default_rng(seed)
    X = rng.standard_normal(n)
    phi = rng.standard_normal(rep.N) + 1j * rng.standard_normal(rep.N)
    psi = rng.standard_normal(rep.N) + 1j * rng.standard_normal(rep.N)
    lhs = hermitian_inner(clifford_mul(rep, X, phi), psi)
    rhs = hermitian_inner(phi, clifford_mul(rep, X, psi))
    assert abs(lhs + rhs) < 1e-10
    lhs = hermitian_inner(chirality_apply(rep, phi), psi)
    rhs = hermitian_inner(phi, chirality_apply(rep, psi))
    assert abs(lhs - rhs) < 1e-10


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_momentum_charge_operator_square(n, reps):
    rep = reps[n]
    rng = np.random.default_rng(n)
    P = rng.standard_normal(n)
    Q = float(rng.standard_normal())
    M = momentum_charge_operator(rep, P, Q)
    assert np.abs(M - M.conj().T).max() < TOL
    target = (np.dot(P, P) + Q ** 2) * np.eye(rep.N)
    assert np.abs(M @ M - target).max() < 1e-12 * (1 + np.dot(P, P) + Q ** 2)
