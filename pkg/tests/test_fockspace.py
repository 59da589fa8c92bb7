import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cbsim.fockspace import (
    HybridState,
    LayoutError,
    LinearOperator,
    ModeLayout,
    apply,
    basis_decode,
    basis_index,
    embed,
    expectation,
    identity,
    ladder_operators,
    leakage,
    number_operator,
    partial_trace,
)
from cbsim import generators as gen

import oracles


def test_layout_dimensions():
    lay = ModeLayout((3, 4, 2))
    assert lay.spin_dim == 2
    assert lay.dim == 2 * 3 * 4 * 2
    assert lay.modes == ("a", "b", "c")
    with pytest.raises(LayoutError):
        ModeLayout((3, 0))
    with pytest.raises(LayoutError):
        ModeLayout((2, 2, 2, 2))


@pytest.mark.parametrize(
    "spin, occ, expected",
    [("g", (0, 0), 0), ("e", (0, 0), 9), ("e", (2, 1), 16)],
)
def test_basis_index_examples(spin, occ, expected):
    assert basis_index(spin, occ, ModeLayout((3, 3))) == expected


def test_basis_index_matches_oracle_ordering():
    lay = ModeLayout((3, 2, 4))
    for s, i, j, k in itertools.product(range(2), range(3), range(2), range(4)):
        assert basis_index(s, (i, j, k), lay) == oracles.flat_index(s, (i, j, k), (3, 2, 4))


def test_basis_index_out_of_range_names_mode():
    with pytest.raises(IndexError, match="mode b"):
        basis_index("g", (0, 3), ModeLayout((3, 3)))


@pytest.mark.parametrize("cutoffs", [(1,), (2, 3), (3, 1, 2), (4, 4)])
def test_basis_round_trip_exhaustive(cutoffs):
    lay = ModeLayout(cutoffs)
    for idx in range(lay.dim):
        s, *occ = basis_decode(idx, lay)
        assert basis_index(s, occ, lay) == idx


def test_ladder_matrix_elements():
    a, a_dag = ladder_operators(ModeLayout((4,)), "a")
    m = a.toarray()
    # spin g block, ⟨2|a|3⟩ = sqrt(3)
    assert m[2, 3] == pytest.approx(math.sqrt(3))
    a2, _ = ladder_operators(ModeLayout((2,)), "a")
    assert a2.toarray()[0, 1] == pytest.approx(1.0)
    np.testing.assert_allclose(a_dag.toarray(), m.conj().T)


def test_ladder_unknown_mode():
    with pytest.raises(KeyError):
        ladder_operators(ModeLayout((3, 3)), "c")


def test_number_operator_eigenvalue():
    lay = ModeLayout((5, 2))
    state = HybridState.basis(lay, "g", 3, 1)
    assert expectation(state, number_operator(lay, "a")).real == pytest.approx(3)
    assert expectation(state, number_operator(lay, "b")).real == pytest.approx(1)


def test_commutator_away_from_edge():
    n = 7
    lay = ModeLayout((n, 3))
    a, a_dag = ladder_operators(lay, "a")
    comm = (a.matrix @ a_dag.matrix - a_dag.matrix @ a.matrix).toarray()
    occ_a = np.array([basis_decode(i, lay)[1] for i in range(lay.dim)])
    keep = occ_a < n - 1
    np.testing.assert_allclose(comm[np.ix_(keep, keep)], np.eye(keep.sum()), atol=1e-14)


def test_apply_identity_and_spin_flip():
    lay = ModeLayout((3, 3))
    psi = HybridState.basis(lay, "g", 0, 0)
    np.testing.assert_array_equal(apply(identity(lay), psi).data, psi.data)
    flip = LinearOperator(lay, embed(lay, {"spin": np.array([[0, 1], [1, 0]])}), "unitary")
    out = apply(flip, psi)
    np.testing.assert_allclose(out.data, HybridState.basis(lay, "e", 0, 0).data)


def test_apply_density_matches_oracle():
    rng = np.random.default_rng(4)
    lay = ModeLayout((3, 2))
    v = rng.normal(size=lay.dim) + 1j * rng.normal(size=lay.dim)
    v /= np.linalg.norm(v)
    rho = HybridState(lay, np.outer(v, v.conj()))
    u = gen.spin_rotation(gen.RotationParams(0.7, 0.3), lay)
    dense = oracles.kron(oracles.rotation(0.7, 0.3), np.eye(6))
    np.testing.assert_allclose(apply(u, rho).data, dense @ rho.data @ dense.conj().T, atol=1e-14)
    np.testing.assert_allclose(apply(u, HybridState(lay, v)).data, dense @ v, atol=1e-14)


def test_apply_creation_number_expectation():
    lay = ModeLayout((6,))
    _, a_dag = ladder_operators(lay, "a")
    state = HybridState.basis(lay, "g", 2)
    out = apply(a_dag, state)  # sqrt(3) |3>, not renormalized
    dense = oracles.kron(np.eye(2), oracles.annihilation(6).conj().T)
    np.testing.assert_allclose(out.data, dense @ state.data)
    assert out.norm() == pytest.approx(math.sqrt(3))
    assert expectation(out.normalized(), number_operator(lay, "a")).real == pytest.approx(3)


def test_apply_layout_mismatch():
    with pytest.raises(LayoutError):
        apply(identity(ModeLayout((2,))), HybridState.basis(ModeLayout((3,)), "g", 0))


def test_hamiltonian_must_be_hermitian():
    lay = ModeLayout((3,))
    a, _ = ladder_operators(lay, "a")
    with pytest.raises(ValueError):
        LinearOperator(lay, a.matrix, "hamiltonian")


def test_coherent_mean_photon_number():
    lay = ModeLayout((20,))
    alpha = math.sqrt(1.8)
    state = gen.prepare("coherent", alpha, "a", lay)
    assert expectation(state, number_operator(lay, "a")).real == pytest.approx(1.8, abs=1e-9)


def test_purity_of_pure_state():
    lay = ModeLayout((3, 3))
    assert HybridState.basis(lay, "e", 1, 2).purity() == pytest.approx(1.0)
    assert HybridState.basis(lay, "e", 1, 2).to_density().purity() == pytest.approx(1.0)


def test_partial_trace_product_and_superposition():
    lay = ModeLayout((3, 3))
    plus = np.array([1, 1]) / math.sqrt(2)
    state = HybridState.product(lay, plus, [np.eye(3)[0], np.eye(3)[0]])
    reduced = partial_trace(state, ["a", "b"])
    expected = np.zeros((9, 9))
    expected[0, 0] = 1
    np.testing.assert_allclose(reduced, expected, atol=1e-15)
    spin = partial_trace(state.to_density(), ["spin"])
    np.testing.assert_allclose(spin, np.outer(plus, plus), atol=1e-15)
    with pytest.raises(ValueError):
        partial_trace(state, [])


def test_partial_trace_noon_one():
    lay = ModeLayout((3, 3))
    psi = np.zeros(lay.dim, dtype=complex)
    psi[basis_index("g", (1, 0), lay)] = 1 / math.sqrt(2)
    psi[basis_index("g", (0, 1), lay)] = 1j / math.sqrt(2)
    rho_a = partial_trace(HybridState(lay, psi).to_density(), ["a"])
    np.testing.assert_allclose(rho_a, np.diag([0.5, 0.5, 0.0]), atol=1e-15)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_unitary_preserves_norm_and_trace(seed):
    rng = np.random.default_rng(seed)
    lay = ModeLayout((4, 4))
    v = rng.normal(size=lay.dim) + 1j * rng.normal(size=lay.dim)
    v /= np.linalg.norm(v)
    u = gen.u_cbs(gen.CbsParams(duration=rng.uniform(0, 1e-3), upsilon=rng.uniform(0, 6)), lay)
    assert apply(u, HybridState(lay, v)).norm() == pytest.approx(1.0, abs=1e-12)
    rho = apply(u, HybridState(lay, v).to_density())
    assert np.trace(rho.data).real == pytest.approx(1.0, abs=1e-12)
    reduced = partial_trace(rho, ["b"])
    assert np.trace(reduced).real == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(reduced, reduced.conj().T, atol=1e-12)


def test_leakage_reports_top_levels():
    lay = ModeLayout((6, 6))
    assert leakage(HybridState.basis(lay, "g", 0, 0)) == 0.0
    assert leakage(HybridState.basis(lay, "g", 0, 4)) == 1.0
