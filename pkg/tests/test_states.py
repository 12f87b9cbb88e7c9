import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qsteer.errors import (
    DegenerateSpectrum,
    DimensionMismatch,
    InvalidSystem,
    NotHermitian,
    NotPSD,
    NotSquare,
    TraceNotOne,
)
from qsteer.states import (
    BlochVector,
    SystemSpec,
    basis_state,
    bloch_vector,
    decompose_target,
    diagonal_state,
    fidelity,
    fix_phase,
    random_density,
    trace_distance,
    validate_density,
)

seeds = st.integers(min_value=0, max_value=2**32 - 1)
dims = st.integers(min_value=2, max_value=5)


def test_validate_maximally_mixed():
    rho = validate_density(np.eye(2) / 2)
    assert np.allclose(rho.mat, np.eye(2) / 2)


def test_validate_ca_mixture():
    rho = validate_density(np.diag([0.75, 0.25]))
    assert rho.populations.tolist() == [0.75, 0.25]


def test_validate_negative_eigenvalue():
    with pytest.raises(NotPSD, match="-2.000e-01"):
        validate_density(np.diag([1.2, -0.2]))


@pytest.mark.parametrize("raw, exc", [
    (np.array([[0.5, 0.1], [0.2, 0.5]]), NotHermitian),
    (np.diag([0.5, 0.4]), TraceNotOne),
    (np.ones((2, 3)) / 2, NotSquare),
    (np.array([[np.nan, 0], [0, 1]]), NotSquare),
])
def test_validate_rejects(raw, exc):
    with pytest.raises(exc):
        validate_density(raw)


def test_validate_does_not_renormalize():
    raw = np.diag([0.5 + 4e-11, 0.5])
    rho = validate_density(raw)
    assert rho.mat[0, 0] == raw[0, 0]
    assert not rho.mat.flags.writeable


def test_decompose_ca_target():
    d = decompose_target(diagonal_state([0.25, 0.75]))
    assert np.allclose(d.eigenvalues, [0.75, 0.25], atol=1e-15)
    assert np.allclose(d.eigenvectors[:, 0], [0, 1])
    assert np.allclose(d.eigenvectors[:, 1], [1, 0])


def test_decompose_pure_state():
    psi = np.array([1, 1]) / np.sqrt(2)
    d = decompose_target(validate_density(np.outer(psi, psi)))
    assert np.allclose(d.eigenvalues, [1, 0], atol=1e-15)
    assert np.allclose(d.eigenvectors[:, 0], psi)


def test_decompose_degenerate():
    with pytest.raises(DegenerateSpectrum):
        decompose_target(validate_density(np.eye(2) / 2))


def test_phase_fixing_is_deterministic():
    v = np.array([0.6j, -0.8j])
    fixed = fix_phase(v)
    assert fixed[1].imag == 0 and fixed[1].real > 0
    tie = fix_phase(np.array([1j, 1j]) / np.sqrt(2))
    assert tie[0].real > 0 and abs(tie[0].imag) < 1e-15


@settings(max_examples=60, deadline=None)
@given(seed=seeds, n=dims)
def test_decompose_round_trip(seed, n):
    rho = random_density(n, np.random.default_rng(seed))
    d = decompose_target(rho, degeneracy_tol=1e-12)
    assert np.all(np.diff(d.eigenvalues) < 0)
    assert abs(d.eigenvalues.sum() - 1) < 1e-10
    assert np.max(np.abs(d.reconstruct() - rho.mat)) < 1e-10
    v = d.eigenvectors
    assert np.allclose(v.conj().T @ v, np.eye(n), atol=1e-12)
    for k in range(n):
        col = v[:, k]
        top = np.argmax(np.abs(col))
        assert abs(col[top].imag) < 1e-15 and col[top].real > 0


def test_trace_distance_examples():
    a, b = diagonal_state([0.75, 0.25]), diagonal_state([0.25, 0.75])
    assert trace_distance(a, a) == 0
    assert trace_distance(basis_state(2, 0), basis_state(2, 1)) == pytest.approx(1.0, abs=1e-15)
    # eigenvalues of a - b are +-1/2
    assert trace_distance(a, b) == pytest.approx(0.5, abs=1e-15)


def test_trace_distance_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        trace_distance(basis_state(2, 0), basis_state(3, 0))


@settings(max_examples=60, deadline=None)
@given(seed=seeds, n=dims)
def test_trace_distance_is_a_metric(seed, n):
    rng = np.random.default_rng(seed)
    a, b, c = (random_density(n, rng, rank=int(rng.integers(1, n + 1))) for _ in range(3))
    assert trace_distance(a, b) == trace_distance(b, a)
    assert trace_distance(a, c) <= trace_distance(a, b) + trace_distance(b, c) + 1e-12
    assert 0 <= trace_distance(a, b) <= 1 + 1e-12


def test_fidelity_examples():
    a, b = diagonal_state([0.75, 0.25]), diagonal_state([0.25, 0.75])
    assert fidelity(a, a) == pytest.approx(1.0, abs=1e-12)
    assert fidelity(basis_state(2, 0), basis_state(2, 1)) == pytest.approx(0.0, abs=1e-12)
    assert fidelity(a, b) == pytest.approx((2 * np.sqrt(3 / 16)) ** 2, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(seed=seeds, n=dims)
def test_fidelity_matches_diagonal_formula(seed, n):
    rng = np.random.default_rng(seed)
    pa, pb = rng.dirichlet(np.ones(n)), rng.dirichlet(np.ones(n))
    expected = np.sum(np.sqrt(pa * pb)) ** 2
    assert fidelity(diagonal_state(pa), diagonal_state(pb)) == pytest.approx(expected, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(seed=seeds, n=dims)
def test_fidelity_one_iff_equal(seed, n):
    rng = np.random.default_rng(seed)
    a, b = random_density(n, rng), random_density(n, rng)
    assert abs(fidelity(a, a) - 1) < 1e-10 and trace_distance(a, a) <= 1e-10
    assert fidelity(a, b) < 1 - 1e-10 and trace_distance(a, b) > 1e-10


def test_bloch_examples():
    assert bloch_vector(basis_state(2, 0)) == BlochVector(0.0, 0.0, 1.0)
    assert bloch_vector(validate_density(np.eye(2) / 2)) == BlochVector(0.0, 0.0, 0.0)
    r = bloch_vector(diagonal_state([0.25, 0.75]))
    assert (r.x, r.y, r.z) == (0.0, 0.0, -0.5)


def test_bloch_requires_two_levels():
    with pytest.raises(DimensionMismatch):
        bloch_vector(basis_state(3, 0))


@settings(max_examples=40, deadline=None)
@given(seed=seeds)
def test_bloch_reconstructs(seed):
    rho = random_density(2, np.random.default_rng(seed))
    r = bloch_vector(rho)
    assert np.linalg.norm(r.as_array()) <= 1 + 1e-10
    assert np.max(np.abs(r.to_density().mat - rho.mat)) < 1e-12


def test_system_spec_validation():
    with pytest.raises(InvalidSystem, match="nondecreasing"):
        SystemSpec([1.0, 0.0], [[0, 1], [0, 0]])
    with pytest.raises(InvalidSystem, match=">= 0"):
        SystemSpec([0.0, 1.0], [[0, -1], [0, 0]])
    with pytest.raises(InvalidSystem, match="upper triangular"):
        SystemSpec([0.0, 1.0], [[0, 1], [1, 0]])
    s = SystemSpec([0.0, 1.0, 3.0], np.triu(np.ones((3, 3)), 1))
    assert s.general_position_issues() == []
    s = SystemSpec([0.0, 1.0, 2.0], np.triu(np.ones((3, 3)), 1))
    assert any("coincide" in m for m in s.general_position_issues())
