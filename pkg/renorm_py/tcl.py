"""
Exact time-local generator of the reduced spin dynamics.

Pipeline: exact composite evolution -> Pauli transfer matrices Λ(t) ->
G(t) = Λ̇(t) Λ(t)⁻¹ -> minimal-dissipation split into an emergent
Hamiltonian K_S(t) and a dissipator with traceless, trace-orthonormal
jump operators.

Pauli transfer matrices act on the operator basis F = {I, σ_x, σ_y, σ_z}/√2,
Λ_ij = Tr(F_i Λ(F_j)). For a qubit the split is explicit: with
b = G[1:, 0] and M = G[1:, 1:],
- the antisymmetric part of M is the precession h × r, K_S = h·σ/2
- the symmetric part fixes the real part of the Kossakowski matrix
- b fixes its imaginary part
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as sla

from renorm_py.errors import DimensionError, SingularMapError
from renorm_py.hilbert import (
    IDENTITY_2,
    SIGMA_MINUS,
    SIGMA_PLUS,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    SpectralPropagator,
    check_cutoff,
)
from renorm_py.models import ModelParams
from renorm_py.renorm import ShiftProfile

logger = logging.getLogger(__name__)

PAULI_BASIS = np.stack([IDENTITY_2, SIGMA_X, SIGMA_Y, SIGMA_Z]) / np.sqrt(2.0)
CONDITION_LIMIT = 1e8
ENVIRONMENT_EIG_FLOOR = 1e-15

# Levi-Civita symbol
EPSILON = np.zeros((3, 3, 3))
for _i, _j, _k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
    EPSILON[_i, _j, _k] = 1.0
    EPSILON[_j, _i, _k] = -1.0

# columns: σ_+, σ_−, σ_z/√2 expanded on (F_x, F_y, F_z)
EQ3_BASIS = np.array(
    [[1.0, 1.0, 0.0], [1j, -1j, 0.0], [0.0, 0.0, np.sqrt(2.0)]], dtype=complex
) / np.sqrt(2.0)


def pauli_vector(rho: np.ndarray) -> np.ndarray:
    """Real coordinates Tr(F_i ρ) of a Hermitian 2×2 operator."""
    return np.real(np.einsum("iab,ba->i", PAULI_BASIS, rho))


def from_pauli_vector(v: np.ndarray) -> np.ndarray:
    return np.einsum("i,iab->ab", np.asarray(v, dtype=float), PAULI_BASIS)


@dataclass(frozen=True, eq=False)
class DynamicalMap:
    time: float
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (4, 4):
            raise DimensionError(f"Pauli transfer matrix must be 4x4, got {m.shape}")
        object.__setattr__(self, "matrix", m)

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return from_pauli_vector(self.matrix @ pauli_vector(rho))

    def trace_defect(self) -> float:
        return float(np.max(np.abs(self.matrix[0] - np.array([1.0, 0.0, 0.0, 0.0]))))


def _environment_factor(rho_e0: np.ndarray) -> np.ndarray:
    """S with S S† = ρ_E, keeping eigenvalues above the floor."""
    vals, vecs = sla.eigh(0.5 * (rho_e0 + rho_e0.conj().T))
    keep = vals > ENVIRONMENT_EIG_FLOOR
    return vecs[:, keep] * np.sqrt(vals[keep])


def reconstruct_maps(hamiltonian: np.ndarray, rho_e0: np.ndarray, times: Sequence[float],
                     check: bool = True) -> List[DynamicalMap]:
    """
    Λ(t) for every t from a single eigendecomposition.

    With U(X ⊗ ρ_E)U† = W (X ⊗ I_r) W†, W = U (I₂ ⊗ S), the reduced image is
    Λ(X)_ab = Σ W[a n, s k] X[s, t] W*[b n, t k].

    With check, the evolved spanning state U(I/2 ⊗ ρ_E)U† = W W†/2 must keep
    its top two Fock levels below the cutoff tolerance at every t, otherwise
    CutoffError is raised.
    """
    rho_e0 = np.asarray(rho_e0, dtype=complex)
    m = rho_e0.shape[0]
    if np.shape(hamiltonian) != (2 * m, 2 * m):
        raise DimensionError(f"hamiltonian {np.shape(hamiltonian)} does not match environment dim {m}")
    factor = _environment_factor(rho_e0)
    r = factor.shape[1]
    lift = np.kron(IDENTITY_2, factor)

    prop = SpectralPropagator(hamiltonian)
    projected = prop.vectors.conj().T @ lift
    maps = []
    for t in times:
        w = prop.vectors @ (np.exp(-1j * prop.energies * t)[:, None] * projected)
        if check:
            check_cutoff(0.5 * (w @ w.conj().T), m - 1)
        w4 = w.reshape(2, m, 2, r)
        images = np.einsum("ansk,jst,bntk->jab", w4, PAULI_BASIS, w4.conj())
        matrix = np.real(np.einsum("iab,jba->ij", PAULI_BASIS, images))
        maps.append(DynamicalMap(time=float(t), matrix=matrix))
    logger.debug("reconstructed %d maps (dim=%d, environment rank=%d)", len(maps), 2 * m, r)
    return maps


def reconstruct_map(hamiltonian: np.ndarray, rho_e0: np.ndarray, t: float, check: bool = True) -> DynamicalMap:
    return reconstruct_maps(hamiltonian, rho_e0, [t], check=check)[0]


# ---------- differentiation ----------

_CENTRAL = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_FIRST = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0
_SECOND = np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / 12.0


def finite_difference(values: np.ndarray, step: float) -> np.ndarray:
    """
    Fourth-order derivative along axis 0 of uniformly sampled values:
    5-point central stencil inside, one-sided stencils on the two edge
    samples at each end.
    """
    v = np.asarray(values, dtype=float)
    n = v.shape[0]
    if n < 5:
        raise ValueError(f"finite differences need at least 5 samples, got {n}")
    out = np.empty_like(v)
    out[2:-2] = np.tensordot(_CENTRAL, np.stack([v[k:n - 4 + k] for k in range(5)]), axes=1)
    out[0] = np.tensordot(_FIRST, v[0:5], axes=1)
    out[1] = np.tensordot(_SECOND, v[0:5], axes=1)
    out[-1] = -np.tensordot(_FIRST, v[-1:-6:-1], axes=1)
    out[-2] = -np.tensordot(_SECOND, v[-1:-6:-1], axes=1)
    return out / step


def _uniform_step(maps: Sequence[DynamicalMap]) -> float:
    times = np.array([m.time for m in maps])
    steps = np.diff(times)
    if steps.size == 0 or np.any(steps <= 0) or np.ptp(steps) > 1e-9 * abs(steps.mean()):
        raise ValueError("generator needs maps on a uniform, increasing time grid")
    return float(steps.mean())


def _invert_check(matrix: np.ndarray, index: int) -> None:
    cond = np.linalg.cond(matrix)
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise SingularMapError(
            f"map at index {index} is near-singular (condition number {cond:.3e})", index=index
        )


def generator(maps: Sequence[DynamicalMap], index: int) -> np.ndarray:
    """G(t_index) = Λ̇ Λ⁻¹ with Λ̇ by 5-point differences."""
    step = _uniform_step(maps)
    n = len(maps)
    if not 0 <= index < n:
        raise IndexError(f"index {index} outside grid of {n} maps")
    lo = min(max(index - 2, 0), n - 5)
    window = np.stack([m.matrix for m in maps[lo:lo + 5]])
    deriv = finite_difference(window, step)[index - lo]
    lam = maps[index].matrix
    _invert_check(lam, index)
    return np.linalg.solve(lam.T, deriv.T).T


def generators(maps: Sequence[DynamicalMap]) -> Tuple[List[Optional[np.ndarray]], List[int]]:
    """All generators along the grid; singular indices get None and are listed."""
    step = _uniform_step(maps)
    stack = np.stack([m.matrix for m in maps])
    deriv = finite_difference(stack, step)
    out: List[Optional[np.ndarray]] = []
    singular: List[int] = []
    for i, lam in enumerate(stack):
        try:
            _invert_check(lam, i)
        except SingularMapError:
            out.append(None)
            singular.append(i)
            continue
        out.append(np.linalg.solve(lam.T, deriv[i].T).T)
    if singular:
        logger.warning("%d near-singular maps skipped", len(singular))
    return out, singular


# ---------- minimal-dissipation split ----------

@dataclass(frozen=True)
class MasterEquationCoefficients:
    """ω̃, γ₊, γ₋, γ_z of ρ̇ = −i[ω̃σ_z/2, ρ] + γ₊D[σ₊] + γ₋D[σ₋] + γ_zD[σ_z]."""
    omega_tilde: float
    gamma_plus: float
    gamma_minus: float
    gamma_z: float
    remainder: float = 0.0


@dataclass(frozen=True, eq=False)
class GeneratorSplit:
    time: float
    hamiltonian: np.ndarray
    rates: np.ndarray
    jumps: np.ndarray
    kossakowski: np.ndarray

    @property
    def omega_tilde(self) -> float:
        """Coefficient of σ_z/2 in K_S."""
        return float(np.real(np.trace(self.hamiltonian @ SIGMA_Z)))

    def coefficients(self) -> MasterEquationCoefficients:
        a = EQ3_BASIS.conj().T @ self.kossakowski @ EQ3_BASIS
        off = a - np.diag(np.diag(a))
        return MasterEquationCoefficients(
            omega_tilde=self.omega_tilde,
            gamma_plus=float(a[0, 0].real),
            gamma_minus=float(a[1, 1].real),
            gamma_z=float(a[2, 2].real) / 2.0,
            remainder=float(np.max(np.abs(off))),
        )


def minimal_dissipation_split(G: np.ndarray, time: float = 0.0) -> GeneratorSplit:
    """
    Unique split of a trace-preserving qubit generator into −i[K_S, ·]
    plus a dissipator whose jump operators are traceless.
    """
    G = np.asarray(G, dtype=float)
    if G.shape != (4, 4):
        raise DimensionError(f"generator must be 4x4, got {G.shape}")
    b = G[1:, 0]
    M = G[1:, 1:]
    anti = 0.5 * (M - M.T)
    sym = 0.5 * (M + M.T)

    h = np.array([anti[2, 1], anti[0, 2], anti[1, 0]])
    hamiltonian = 0.5 * (h[0] * SIGMA_X + h[1] * SIGMA_Y + h[2] * SIGMA_Z)

    real_part = 0.5 * sym - 0.25 * np.trace(sym) * np.eye(3)
    imag_part = -0.25 * np.einsum("ijm,m->ij", EPSILON, b)
    # Kossakowski matrix on F = σ/√2
    kossakowski = 2.0 * (real_part + 1j * imag_part)
    rates, vecs = np.linalg.eigh(kossakowski)
    jumps = np.einsum("ik,iab->kab", vecs, PAULI_BASIS[1:])
    return GeneratorSplit(
        time=float(time), hamiltonian=hamiltonian, rates=rates, jumps=jumps, kossakowski=kossakowski
    )


def lindblad_generator(hamiltonian: np.ndarray, jumps: Sequence[np.ndarray], rates: Sequence[float]) -> np.ndarray:
    """Pauli transfer matrix of ρ ↦ −i[K, ρ] + Σ γ_k (L ρ L† − ½{L†L, ρ})."""
    K = np.asarray(hamiltonian, dtype=complex)

    def superop(x: np.ndarray) -> np.ndarray:
        out = -1j * (K @ x - x @ K)
        for rate, L in zip(rates, jumps):
            L = np.asarray(L, dtype=complex)
            LdL = L.conj().T @ L
            out = out + rate * (L @ x @ L.conj().T - 0.5 * (LdL @ x + x @ LdL))
        return out

    images = np.stack([superop(F) for F in PAULI_BASIS])
    return np.real(np.einsum("iab,jba->ij", PAULI_BASIS, images))


def assemble_generator(coeffs: MasterEquationCoefficients) -> np.ndarray:
    return lindblad_generator(
        0.5 * coeffs.omega_tilde * SIGMA_Z,
        [SIGMA_PLUS, SIGMA_MINUS, SIGMA_Z],
        [coeffs.gamma_plus, coeffs.gamma_minus, coeffs.gamma_z],
    )


def larmor_frequency_exact(maps: Sequence[DynamicalMap], params: ModelParams) -> ShiftProfile:
    """
    ω̃(t) from the emergent Hamiltonian along the grid, returned as a
    ShiftProfile relative to params.omega. Singular maps become singular
    times.
    """
    gens, singular = generators(maps)
    times, shifts = [], []
    for m, G in zip(maps, gens):
        if G is None:
            continue
        times.append(m.time)
        shifts.append(minimal_dissipation_split(G, m.time).omega_tilde - params.omega)
    return ShiftProfile(
        times=np.array(times),
        shift=np.array(shifts),
        params=params,
        singular_times=np.array([maps[i].time for i in singular]),
    )
