"""
Dense linear algebra on the spin ⊗ truncated-oscillator space.

Conventions (fixed for the whole package):
- spin basis ordering (|↑⟩, |↓⟩), σ_z = diag(+1, −1), σ_+|↓⟩ = |↑⟩,
  σ_y = [[0, −i], [i, 0]] so that σ_y|↑⟩ = +i|↓⟩
- Fock ordering |0⟩ … |n_max⟩
- composite ordering spin ⊗ mode (spin factor first)
- Hamiltonians are stored as H/ħ in rad/s, times in seconds
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
import scipy.linalg as sla

from renorm_py.errors import CutoffError, DimensionError, NonHermitianError

logger = logging.getLogger(__name__)

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-10
POSITIVITY_TOL = 1e-10
CUTOFF_TOL = 1e-8
DEFAULT_PADDING = 10

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)

SPIN_UP = np.array([1, 0], dtype=complex)
SPIN_DOWN = np.array([0, 1], dtype=complex)

PAULI = {"sigma_x": SIGMA_X, "sigma_y": SIGMA_Y, "sigma_z": SIGMA_Z}


# ---------- construction ----------

def _as_square(a: np.ndarray, name: str = "matrix") -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {a.shape}")
    return a


def mode_dim(n_max: int) -> int:
    return n_max + 1


def destroy(n_max: int) -> np.ndarray:
    """Annihilation operator a on Fock levels 0..n_max."""
    return np.diag(np.sqrt(np.arange(1, n_max + 1, dtype=float)), k=1).astype(complex)


def create(n_max: int) -> np.ndarray:
    return destroy(n_max).conj().T


def number(n_max: int) -> np.ndarray:
    return np.diag(np.arange(n_max + 1, dtype=float)).astype(complex)


def fock(n: int, n_max: int) -> np.ndarray:
    if not 0 <= n <= n_max:
        raise DimensionError(f"Fock level {n} outside 0..{n_max}")
    psi = np.zeros(n_max + 1, dtype=complex)
    psi[n] = 1.0
    return psi


def ket2dm(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).ravel()
    return np.outer(psi, psi.conj())


def tensor(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product, first factor is the spin."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def spin_op(op: np.ndarray, n_max: int) -> np.ndarray:
    return tensor(op, np.eye(mode_dim(n_max), dtype=complex))


def mode_op(op: np.ndarray) -> np.ndarray:
    return tensor(IDENTITY_2, op)


# ---------- reduction ----------

def _split_dims(rho: np.ndarray, n_max: int) -> np.ndarray:
    rho = _as_square(rho, "rho")
    m = mode_dim(n_max)
    if rho.shape[0] != 2 * m:
        raise DimensionError(f"expected dimension {2 * m} for n_max={n_max}, got {rho.shape[0]}")
    return rho.reshape(2, m, 2, m)


def partial_trace_mode(rho: np.ndarray, n_max: int) -> np.ndarray:
    """Tr_E ρ: the 2×2 spin state."""
    return np.einsum("ajbj->ab", _split_dims(rho, n_max))


def partial_trace_spin(rho: np.ndarray, n_max: int) -> np.ndarray:
    """Tr_S ρ: the (n_max+1)×(n_max+1) mode state."""
    return np.einsum("ajak->jk", _split_dims(rho, n_max))


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    rho = _as_square(rho, "rho")
    sigma = _as_square(sigma, "sigma")
    if rho.shape != sigma.shape:
        raise DimensionError(f"trace distance needs equal dims, got {rho.shape} and {sigma.shape}")
    diff = rho - sigma
    diff = 0.5 * (diff + diff.conj().T)
    value = 0.5 * float(np.sum(np.abs(sla.eigvalsh(diff))))
    return min(value, 1.0)


def hermiticity_defect(a: np.ndarray) -> float:
    a = _as_square(a)
    return float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0


def is_hermitian(a: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    a = _as_square(a)
    scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
    return hermiticity_defect(a) <= tol * scale


def expectation(obs: np.ndarray, rho: np.ndarray) -> float:
    obs = _as_square(obs, "observable")
    rho = _as_square(rho, "rho")
    if obs.shape != rho.shape:
        raise DimensionError(f"observable {obs.shape} and state {rho.shape} differ")
    if not is_hermitian(obs):
        raise NonHermitianError(f"observable is not Hermitian (defect {hermiticity_defect(obs):.3e})")
    value = np.trace(obs @ rho)
    if abs(value.imag) > TRACE_TOL:
        raise NonHermitianError(f"expectation has imaginary part {value.imag:.3e}; is rho Hermitian?")
    return float(value.real)


def check_density_matrix(rho: np.ndarray) -> None:
    """Raise ValueError listing every violated density-matrix invariant."""
    rho = _as_square(rho, "rho")
    problems = []
    defect = hermiticity_defect(rho)
    if defect > HERMITIAN_TOL:
        problems.append(f"Hermitian defect {defect:.3e}")
    tr = np.trace(rho)
    if abs(tr - 1.0) > TRACE_TOL:
        problems.append(f"trace {tr.real:.12f}")
    lowest = float(sla.eigvalsh(0.5 * (rho + rho.conj().T))[0])
    if lowest < -POSITIVITY_TOL:
        problems.append(f"negative eigenvalue {lowest:.3e}")
    if problems:
        raise ValueError("not a density matrix: " + ", ".join(problems))


# ---------- evolution ----------

class SpectralPropagator:
    """
    Exact propagator of a static Hamiltonian, U(t) = V exp(−iEt) V†.

    The eigendecomposition is done once; unitary(t) and evolve(rho, t)
    reuse it for any number of times.
    """

    def __init__(self, hamiltonian: np.ndarray):
        h = _as_square(hamiltonian, "hamiltonian")
        if not is_hermitian(h, tol=1e-10):
            raise NonHermitianError(f"hamiltonian is not Hermitian (defect {hermiticity_defect(h):.3e})")
        self.dim = h.shape[0]
        self.energies, self.vectors = sla.eigh(0.5 * (h + h.conj().T))
        logger.debug("spectral propagator built, dim=%d", self.dim)

    def unitary(self, t: float) -> np.ndarray:
        phases = np.exp(-1j * self.energies * t)
        return (self.vectors * phases) @ self.vectors.conj().T

    def evolve(self, rho: np.ndarray, t: float) -> np.ndarray:
        u = self.unitary(t)
        return u @ rho @ u.conj().T

    def evolve_ket(self, psi: np.ndarray, t: float) -> np.ndarray:
        return self.unitary(t) @ psi


def hermitian_propagator(hamiltonian: np.ndarray, t: float) -> np.ndarray:
    return SpectralPropagator(hamiltonian).unitary(t)


def matrix_exponential_antihermitian(generator: np.ndarray) -> np.ndarray:
    """exp(G) for anti-Hermitian G, through the eigenbasis of the Hermitian −iG."""
    g = _as_square(generator, "generator")
    x = -1j * g
    if not is_hermitian(x, tol=1e-10):
        raise NonHermitianError(f"generator is not anti-Hermitian (defect {hermiticity_defect(x):.3e})")
    vals, vecs = sla.eigh(0.5 * (x + x.conj().T))
    return (vecs * np.exp(1j * vals)) @ vecs.conj().T


def displacement_operator(eta: float, n_max: int, padding: int = DEFAULT_PADDING) -> np.ndarray:
    """
    C(η) = exp[iη(a† + a)] on Fock levels 0..n_max.

    Computed at cutoff n_max + padding and truncated back, so the corrupt
    top rows of the truncated generator stay outside the retained block.
    """
    if padding < 0:
        raise ValueError(f"padding must be >= 0, got {padding}")
    big = n_max + padding
    a = destroy(big)
    full = matrix_exponential_antihermitian(1j * eta * (a + a.conj().T))
    m = mode_dim(n_max)
    return full[:m, :m]


# ---------- cutoff ----------

def top_fock_population(rho: np.ndarray, n_max: int, levels: int = 2) -> float:
    mode = partial_trace_spin(rho, n_max)
    pops = np.real(np.diag(mode))
    return float(np.sum(pops[-levels:]))


def check_cutoff(rho: np.ndarray, n_max: int, tol: float = CUTOFF_TOL) -> float:
    """Raise CutoffError when the top two Fock levels hold ≥ tol of the population."""
    top = top_fock_population(rho, n_max)
    if top >= tol:
        raise CutoffError(
            f"Fock cutoff n_max={n_max} too small: top two levels hold {top:.3e} (limit {tol:.0e})"
        )
    return top


# ---------- spin view ----------

@dataclass(frozen=True, eq=False)
class SpinState:
    """Reduced two-level state with a Bloch-vector view."""
    matrix: np.ndarray

    def __post_init__(self):
        m = _as_square(self.matrix, "spin state")
        if m.shape != (2, 2):
            raise DimensionError(f"spin state must be 2x2, got {m.shape}")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_bloch(cls, x: float, y: float, z: float) -> "SpinState":
        return cls(0.5 * (IDENTITY_2 + x * SIGMA_X + y * SIGMA_Y + z * SIGMA_Z))

    @property
    def bloch(self) -> Tuple[float, float, float]:
        m = self.matrix
        return (
            float(np.real(np.trace(SIGMA_X @ m))),
            float(np.real(np.trace(SIGMA_Y @ m))),
            float(np.real(np.trace(SIGMA_Z @ m))),
        )

    @property
    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def expectation(self, name: str) -> float:
        return expectation(PAULI[name], self.matrix)
