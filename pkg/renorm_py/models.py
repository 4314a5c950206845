"""
Model Hamiltonians: Jaynes-Cummings (JC) and the trapped-ion (TI) family.

TI variants (static interaction-frame forms):
- ti_full: (Ω_R/2)[C† σ_− + C σ_+] with C = exp[iη(a† + a)]
- ti_ld:   C replaced by its Lamb-Dicke form 1 + iη(a† + a)
- ti_rsb:  red-sideband term only, (ηΩ_R/2)(a† σ_− + a σ_+)

All operators live on spin ⊗ mode with the conventions of renorm_py.hilbert.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Dict, Optional

import numpy as np

from renorm_py.errors import CutoffError
from renorm_py.hilbert import (
    CUTOFF_TOL,
    SIGMA_MINUS,
    SIGMA_PLUS,
    SIGMA_Z,
    create,
    destroy,
    displacement_operator,
    mode_op,
    number,
    spin_op,
    tensor,
)

MODELS = ("jc", "ti_full", "ti_ld", "ti_rsb")


@dataclass(frozen=True)
class ModelParams:
    """
    Physical parameters in rad/s (frequencies) and 1/(rad/s) (beta).

    Exactly one of nbar/beta may be given; beta is converted to nbar at
    construction and not kept. Neither means the vacuum.
    """
    omega_m: float
    omega: Optional[float] = None
    omega_star: Optional[float] = None
    g: float = 0.0
    eta: float = 0.0
    omega_rabi: float = 0.0
    nbar: Optional[float] = None
    beta: Optional[float] = None
    n_max: int = 30

    def __post_init__(self):
        if not self.omega_m > 0:
            raise ValueError(f"omega_m must be > 0, got {self.omega_m}")
        for name in ("omega", "omega_star"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ValueError(f"{name} must be > 0, got {value}")
        if self.omega is None and self.omega_star is None:
            raise ValueError("one of omega / omega_star must be set")
        if self.g < 0:
            raise ValueError(f"g must be >= 0, got {self.g}")
        if not 0.0 <= self.eta < 1.0:
            raise ValueError(f"eta must lie in [0, 1), got {self.eta}")
        if self.omega_rabi < 0:
            raise ValueError(f"omega_rabi must be >= 0, got {self.omega_rabi}")
        if int(self.n_max) != self.n_max or self.n_max < 2:
            raise ValueError(f"n_max must be an integer >= 2, got {self.n_max}")

        if self.nbar is not None and self.beta is not None:
            raise ValueError("set nbar or beta, not both")
        if self.beta is not None:
            if not self.beta > 0:
                raise ValueError(f"beta must be > 0, got {self.beta}")
            nbar = 1.0 / math.expm1(self.beta * self.omega_m)
            object.__setattr__(self, "nbar", nbar)
            object.__setattr__(self, "beta", None)
        elif self.nbar is None:
            object.__setattr__(self, "nbar", 0.0)
        if self.nbar < 0:
            raise ValueError(f"nbar must be >= 0, got {self.nbar}")
        object.__setattr__(self, "n_max", int(self.n_max))

    @property
    def detuning(self) -> float:
        """Δ = ω_m − ω."""
        if self.omega is None:
            raise ValueError("detuning needs omega; map TI parameters with jc_equivalent first")
        return self.omega_m - self.omega

    @property
    def inverse_temperature(self) -> float:
        if self.nbar == 0:
            return math.inf
        return math.log1p(1.0 / self.nbar) / self.omega_m

    @property
    def boltzmann_ratio(self) -> float:
        """q = e^{−βω_m} = n̄/(1 + n̄)."""
        return self.nbar / (1.0 + self.nbar)


def _require(p: ModelParams, *names: str) -> None:
    missing = [n for n in names if getattr(p, n) is None]
    if missing:
        raise ValueError(f"parameters missing for this model: {', '.join(missing)}")


def _bare_terms(spin_frequency: float, p: ModelParams) -> np.ndarray:
    return 0.5 * spin_frequency * spin_op(SIGMA_Z, p.n_max) + p.omega_m * mode_op(number(p.n_max))


def jc_hamiltonian(p: ModelParams) -> np.ndarray:
    _require(p, "omega")
    a = destroy(p.n_max)
    coupling = tensor(SIGMA_PLUS, a) + tensor(SIGMA_MINUS, a.conj().T)
    return _bare_terms(p.omega, p) + p.g * coupling


def _ti_hamiltonian(p: ModelParams, c: np.ndarray) -> np.ndarray:
    _require(p, "omega_star")
    interaction = tensor(SIGMA_MINUS, c.conj().T) + tensor(SIGMA_PLUS, c)
    return _bare_terms(p.omega_star, p) + 0.5 * p.omega_rabi * interaction


def ti_hamiltonian_full(p: ModelParams) -> np.ndarray:
    return _ti_hamiltonian(p, displacement_operator(p.eta, p.n_max))


def ti_hamiltonian_ld(p: ModelParams) -> np.ndarray:
    a = destroy(p.n_max)
    c_ld = np.eye(p.n_max + 1, dtype=complex) + 1j * p.eta * (a + a.conj().T)
    return _ti_hamiltonian(p, c_ld)


def ti_hamiltonian_rsb(p: ModelParams) -> np.ndarray:
    _require(p, "omega_star")
    a = destroy(p.n_max)
    sideband = tensor(SIGMA_MINUS, create(p.n_max)) + tensor(SIGMA_PLUS, a)
    return _bare_terms(p.omega_star, p) + 0.5 * p.eta * p.omega_rabi * sideband


HAMILTONIANS: Dict[str, Callable[[ModelParams], np.ndarray]] = {
    "jc": jc_hamiltonian,
    "ti_full": ti_hamiltonian_full,
    "ti_ld": ti_hamiltonian_ld,
    "ti_rsb": ti_hamiltonian_rsb,
}


def _check_model(model: str) -> None:
    if model not in HAMILTONIANS:
        raise ValueError(f"unknown model {model!r}; expected one of {MODELS}")


def build_hamiltonian(p: ModelParams, model: str) -> np.ndarray:
    _check_model(model)
    return HAMILTONIANS[model](p)


def map_ti_to_jc(p: ModelParams) -> ModelParams:
    """ω = √(ω*² + Ω_R²), g = ηΩ_R/2; everything else copied."""
    _require(p, "omega_star")
    return replace(p, omega=math.hypot(p.omega_star, p.omega_rabi), g=0.5 * p.eta * p.omega_rabi)


def jc_equivalent(p: ModelParams, model: str) -> ModelParams:
    """JC parameters describing `model` (identity for jc)."""
    _check_model(model)
    if model == "jc":
        _require(p, "omega")
        return p
    if model == "ti_rsb":
        _require(p, "omega_star")
        return replace(p, omega=p.omega_star, g=0.5 * p.eta * p.omega_rabi)
    return map_ti_to_jc(p)


def free_hamiltonian(p: ModelParams, model: str) -> np.ndarray:
    """Coupling off: spin at its JC-equivalent frequency, mode at ω_m."""
    return _bare_terms(jc_equivalent(p, model).omega, p)


def with_detuning(p: ModelParams, delta: float, model: str = "jc") -> ModelParams:
    """Keep the spin, move the mode to ω_m = ω_JC + Δ with ω_JC the JC-equivalent spin frequency."""
    return replace(p, omega_m=jc_equivalent(p, model).omega + delta)


def excitation_number(n_max: int) -> np.ndarray:
    return 0.5 * spin_op(SIGMA_Z, n_max) + mode_op(number(n_max))


def thermal_mode_state(p: ModelParams, tol: float = CUTOFF_TOL) -> np.ndarray:
    """Geometric Fock populations (1 − q)qⁿ, renormalised after truncation."""
    q = p.boltzmann_ratio
    levels = np.arange(p.n_max + 1)
    pops = (1.0 - q) * q ** levels
    lost = 1.0 - float(np.sum(pops))
    if lost > tol:
        raise CutoffError(
            f"thermal state with nbar={p.nbar} loses {lost:.3e} of its population above n_max={p.n_max}"
        )
    pops = pops / np.sum(pops)
    return np.diag(pops).astype(complex)
