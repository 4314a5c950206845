import math

import numpy as np
import pytest
import scipy.linalg as sla

from renorm_py.errors import CutoffError, DimensionError, NonHermitianError
from renorm_py.hilbert import (
    IDENTITY_2,
    SIGMA_PLUS,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    SPIN_DOWN,
    SPIN_UP,
    SpectralPropagator,
    SpinState,
    check_cutoff,
    check_density_matrix,
    create,
    destroy,
    displacement_operator,
    expectation,
    fock,
    hermitian_propagator,
    hermiticity_defect,
    is_hermitian,
    ket2dm,
    partial_trace_mode,
    partial_trace_spin,
    tensor,
    trace_distance,
)


def _random_hermitian(dim, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return 0.5 * (a + a.conj().T)


def test_ladder_commutator_is_identity_below_cutoff():
    n_max = 6
    a, ad = destroy(n_max), create(n_max)
    comm = a @ ad - ad @ a
    # truncation only spoils the last diagonal entry
    assert np.allclose(np.diag(comm)[:-1], 1.0)
    assert comm[-1, -1] == pytest.approx(-n_max)


def test_sigma_y_convention():
    psi = (SPIN_UP + 1j * SPIN_DOWN) / math.sqrt(2)
    assert expectation(SIGMA_Y, ket2dm(psi)) == pytest.approx(1.0)
    assert np.allclose(SIGMA_Y @ SPIN_UP, 1j * SPIN_DOWN)


def test_partial_traces_of_product_state():
    n_max = 3
    spin = SpinState.from_bloch(0.3, -0.2, 0.5).matrix
    mode = ket2dm((fock(1, n_max) + fock(2, n_max)) / math.sqrt(2))
    rho = tensor(spin, mode)
    assert np.allclose(partial_trace_mode(rho, n_max), spin)
    assert np.allclose(partial_trace_spin(rho, n_max), mode)


def test_partial_trace_rejects_wrong_dimension():
    with pytest.raises(DimensionError):
        partial_trace_mode(np.eye(6), n_max=3)


def test_trace_distance_extremes():
    up, down = ket2dm(SPIN_UP), ket2dm(SPIN_DOWN)
    assert trace_distance(up, down) == pytest.approx(1.0)
    assert trace_distance(up, up) == pytest.approx(0.0, abs=1e-15)
    plus = SpinState.from_bloch(1, 0, 0).matrix
    assert trace_distance(up, plus) == pytest.approx(1 / math.sqrt(2))


def test_spectral_propagator_matches_expm():
    h = _random_hermitian(6, seed=3)
    t = 0.73
    u = SpectralPropagator(h).unitary(t)
    assert np.allclose(u, sla.expm(-1j * h * t), atol=1e-12)
    assert np.allclose(u @ u.conj().T, np.eye(6), atol=1e-12)


def test_spectral_propagator_rejects_non_hermitian():
    with pytest.raises(NonHermitianError):
        SpectralPropagator(np.array([[0, 1], [0, 0]], dtype=complex))


def test_displacement_operator_low_block():
    assert np.allclose(displacement_operator(0.0, 5), np.eye(6))
    eta = 0.4
    c = displacement_operator(eta, 30)
    # ⟨0|exp(iη(a + a†))|0⟩ = exp(−η²/2)
    assert c[0, 0] == pytest.approx(math.exp(-eta ** 2 / 2), abs=1e-12)
    # retained block of a unitary: columns of low Fock states stay normalised
    assert np.allclose(np.sum(np.abs(c[:, :10]) ** 2, axis=0), 1.0, atol=1e-10)


def test_check_density_matrix_lists_problems():
    check_density_matrix(ket2dm(SPIN_UP))
    with pytest.raises(ValueError) as err:
        check_density_matrix(np.diag([0.7, 0.7]).astype(complex))
    assert "trace" in str(err.value)
    with pytest.raises(ValueError):
        check_density_matrix(np.diag([1.2, -0.2]).astype(complex))


def test_expectation_rejects_non_hermitian_observable():
    with pytest.raises(NonHermitianError):
        expectation(np.array([[0, 1], [0, 0]], dtype=complex), ket2dm(SPIN_UP))


def test_check_cutoff():
    n_max = 4
    low = tensor(ket2dm(SPIN_DOWN), ket2dm(fock(1, n_max)))
    assert check_cutoff(low, n_max) == pytest.approx(0.0)
    high = tensor(ket2dm(SPIN_DOWN), ket2dm(fock(n_max, n_max)))
    with pytest.raises(CutoffError):
        check_cutoff(high, n_max)


def test_spin_state_bloch_round_trip():
    s = SpinState.from_bloch(0.1, 0.2, -0.6)
    assert s.bloch == pytest.approx((0.1, 0.2, -0.6))
    assert s.expectation("sigma_z") == pytest.approx(-0.6)
    assert s.purity == pytest.approx(0.5 * (1 + 0.01 + 0.04 + 0.36))
    assert SpinState.from_bloch(0, 0, 1).purity == pytest.approx(1.0)
    with pytest.raises(DimensionError):
        SpinState(np.eye(3))


def test_pauli_algebra():
    assert np.allclose(SIGMA_X @ SIGMA_Y, 1j * SIGMA_Z)


def _random_density(dim, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


def _random_unitary(dim, seed):
    return SpectralPropagator(_random_hermitian(dim, seed)).unitary(1.0)


def test_kronecker_examples():
    assert np.allclose(tensor(IDENTITY_2, np.eye(3)), np.eye(6))
    assert np.allclose(tensor(SIGMA_Z, np.eye(2)), np.diag([1, 1, -1, -1]))
    # basis |↑0⟩, |↑1⟩, |↓0⟩, |↓1⟩: only |↓,1⟩ → |↑,0⟩ survives
    expected = np.zeros((4, 4), dtype=complex)
    expected[0, 3] = 1.0
    assert np.allclose(tensor(SIGMA_PLUS, destroy(1)), expected)


def test_propagator_group_property():
    h = _random_hermitian(6, seed=11)
    assert np.allclose(hermitian_propagator(h, 0.0), np.eye(6))
    for t1, t2 in ((0.3, 0.55), (-1.2, 2.7), (4.0, 0.01)):
        lhs = hermitian_propagator(h, t1) @ hermitian_propagator(h, t2)
        assert np.allclose(lhs, hermitian_propagator(h, t1 + t2), atol=1e-10)
    u = hermitian_propagator(0.7 * SIGMA_Z / 2, 1.9)
    assert np.allclose(u @ SPIN_UP, np.exp(-0.35j * 1.9) * SPIN_UP)


@pytest.mark.parametrize("seed", range(5))
def test_partial_trace_contracts_trace_distance(seed):
    n_max = 3
    rho = _random_density(2 * (n_max + 1), seed)
    sigma = _random_density(2 * (n_max + 1), seed + 100)
    full = trace_distance(rho, sigma)
    reduced = trace_distance(partial_trace_mode(rho, n_max), partial_trace_mode(sigma, n_max))
    assert reduced <= full + 1e-12


@pytest.mark.parametrize("seed", range(3))
def test_partial_trace_is_covariant_under_local_unitaries(seed):
    n_max = 4
    rho = _random_density(2 * (n_max + 1), seed)
    u = _random_unitary(2, seed + 7)
    v = _random_unitary(n_max + 1, seed + 13)
    spin_rotated = tensor(u, np.eye(n_max + 1)) @ rho @ tensor(u, np.eye(n_max + 1)).conj().T
    assert np.allclose(partial_trace_mode(spin_rotated, n_max), u @ partial_trace_mode(rho, n_max) @ u.conj().T)
    mode_rotated = tensor(IDENTITY_2, v) @ rho @ tensor(IDENTITY_2, v).conj().T
    assert np.allclose(partial_trace_mode(mode_rotated, n_max), partial_trace_mode(rho, n_max))


def test_hermiticity_tolerance_scales_with_magnitude():
    h = 2 * math.pi * 1.3e6 * _random_hermitian(4, seed=5)
    skew = np.zeros((4, 4), dtype=complex)
    skew[0, 1] = 1e-7
    assert hermiticity_defect(h + skew) == pytest.approx(1e-7, rel=0.05)
    # 1e-7 against entries of order 1e7 is a relative defect of 1e-14
    assert is_hermitian(h + skew)
    assert not is_hermitian(_random_hermitian(4, seed=5) + skew)
    assert not is_hermitian(h + 1e3 * skew)
