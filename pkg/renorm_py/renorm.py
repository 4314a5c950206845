"""
Closed-form frequency renormalisation of the JC spin.

The thermal decoherence function is the series

    γ(t) = (1 − q) Σ_n qⁿ c(n, t) c(n+1, t),   q = n̄/(1 + n̄)

with the one-excitation-manifold coefficients

    c(n, t) = e^{−iΔt/2} [cos(Ω_n t/2) + iΔ sin(Ω_n t/2)/Ω_n],   Ω_n = √(Δ² + 4g²n)

and the shift is δω̃(t) = −Im(γ̇/γ). In the vacuum this reduces to

    δω̃(t) = −(2g²/Δ) / (1 + (Ω₁²/Δ²) cot²(Ω₁t/2)),

periodic with T = 2π/Ω₁ and averaging to −2g² sign(Δ)/(|Δ| + Ω₁).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np
from scipy.integrate import trapezoid

from renorm_py.errors import ResonanceError, SeriesConvergenceError, SingularTimeError
from renorm_py.models import ModelParams

logger = logging.getLogger(__name__)

SERIES_RTOL = 1e-14
SERIES_WEIGHT_FLOOR = 1e-24
SERIES_CAP = 10_000
SINGULAR_GAMMA = 1e-10

ROUTES = ("thermal", "vacuum")


def rabi_frequency(n: int, p: ModelParams) -> float:
    """Ω_n = √(Δ² + 4g²n)."""
    return math.sqrt(p.detuning ** 2 + 4.0 * p.g ** 2 * n)


@dataclass(frozen=True)
class RabiLadder:
    n: int
    omega_n: float

    def __post_init__(self):
        if self.n < 0:
            raise ValueError(f"excitation index must be >= 0, got {self.n}")

    @classmethod
    def from_params(cls, n: int, p: ModelParams) -> "RabiLadder":
        return cls(n=n, omega_n=rabi_frequency(n, p))


def _require_detuning(p: ModelParams, formula: str) -> float:
    delta = p.detuning
    if delta == 0:
        raise ResonanceError(f"{formula} is singular at Δ = 0; use shift_thermal with nbar=0 on resonance")
    return delta


def coeff_c(n: int, t, p: ModelParams):
    """c(n, t); c(0, t) = 1 identically."""
    t = np.asarray(t, dtype=float)
    if n == 0:
        return np.ones_like(t, dtype=complex)[()]
    delta = p.detuning
    om = rabi_frequency(n, p)
    # Δ sin(Ωt/2)/Ω written through sinc so that Ω → 0 stays finite
    ratio_sin = delta * 0.5 * t * np.sinc(om * t / (2.0 * np.pi))
    bracket = np.cos(0.5 * om * t) + 1j * ratio_sin
    return (np.exp(-0.5j * delta * t) * bracket)[()]


def coeff_c_dot(n: int, t, p: ModelParams):
    """ċ(n, t) = −(iΔ/2)c + e^{−iΔt/2}[−(Ω_n/2) sin(Ω_n t/2) + (iΔ/2) cos(Ω_n t/2)]."""
    t = np.asarray(t, dtype=float)
    if n == 0:
        return np.zeros_like(t, dtype=complex)[()]
    delta = p.detuning
    om = rabi_frequency(n, p)
    half = 0.5 * om * t
    inner = -0.5 * om * np.sin(half) + 0.5j * delta * np.cos(half)
    return (-0.5j * delta * coeff_c(n, t, p) + np.exp(-0.5j * delta * t) * inner)[()]


@dataclass(frozen=True, eq=False)
class SeriesResult:
    gamma: np.ndarray
    gamma_dot: np.ndarray
    terms: int


def thermal_series(t, p: ModelParams, cap: int = SERIES_CAP) -> SeriesResult:
    """
    γ(t) and γ̇(t) summed together until both have converged.

    A term is negligible when |term| ≤ 1e−14·|partial sum| or its weight
    (1 − q)qⁿ is below 1e−24; for γ̇ the scale is |γ̇| + Ω₁|γ|.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    q = p.boltzmann_ratio
    omega_1 = rabi_frequency(1, p)

    gamma = np.zeros_like(t, dtype=complex)
    gamma_dot = np.zeros_like(t, dtype=complex)
    c_n = coeff_c(0, t, p) * np.ones_like(t, dtype=complex)
    cd_n = coeff_c_dot(0, t, p) * np.ones_like(t, dtype=complex)
    weight = 1.0 - q
    for n in range(cap):
        c_next = np.atleast_1d(coeff_c(n + 1, t, p))
        cd_next = np.atleast_1d(coeff_c_dot(n + 1, t, p))
        term = weight * c_n * c_next
        dterm = weight * (cd_n * c_next + c_n * cd_next)
        gamma += term
        gamma_dot += dterm

        if weight < SERIES_WEIGHT_FLOOR:
            done = True
        else:
            done = bool(np.all(np.abs(term) <= SERIES_RTOL * np.abs(gamma))) and bool(
                np.all(np.abs(dterm) <= SERIES_RTOL * (np.abs(gamma_dot) + omega_1 * np.abs(gamma)))
            )
        if done:
            logger.debug("thermal series converged after %d terms (nbar=%g)", n + 1, p.nbar)
            return SeriesResult(gamma=gamma, gamma_dot=gamma_dot, terms=n + 1)

        c_n, cd_n = c_next, cd_next
        weight *= q

    raise SeriesConvergenceError(
        f"thermal series did not converge within {cap} terms (nbar={p.nbar}); temperature too high"
    )


def gamma_thermal(t, p: ModelParams):
    res = thermal_series(t, p)
    return res.gamma[0] if np.ndim(t) == 0 else res.gamma


def gamma_thermal_derivative(t, p: ModelParams):
    res = thermal_series(t, p)
    return res.gamma_dot[0] if np.ndim(t) == 0 else res.gamma_dot


def shift_thermal(t: float, p: ModelParams) -> float:
    """δω̃(t) = −Im(γ̇/γ); raises SingularTimeError where |γ| ≤ 1e−10."""
    res = thermal_series(t, p)
    g, gd = res.gamma[0], res.gamma_dot[0]
    if abs(g) <= SINGULAR_GAMMA:
        raise SingularTimeError(f"|γ(t)| = {abs(g):.3e} at t = {t!r}: shift undefined", time=float(t))
    return float(-(gd / g).imag)


def shift_vacuum(t, p: ModelParams):
    """
    Vacuum shift in the cancellation-free form −2g²Δ s²/(Ω₁²c² + Δ²s²),
    s, c = sin, cos(Ω₁t/2); equals 0 where sin(Ω₁t/2) = 0.
    """
    delta = _require_detuning(p, "the vacuum shift −(2g²/Δ)/(1 + (Ω₁²/Δ²)cot²(Ω₁t/2))")
    om = rabi_frequency(1, p)
    half = 0.5 * om * np.asarray(t, dtype=float)
    s2 = np.sin(half) ** 2
    c2 = np.cos(half) ** 2
    value = -2.0 * p.g ** 2 * delta * s2 / (om ** 2 * c2 + delta ** 2 * s2)
    return value[()] if np.ndim(value) == 0 else value


def average_shift_vacuum(p: ModelParams) -> float:
    delta = _require_detuning(p, "the period average −2g² sign(Δ)/(|Δ| + Ω₁)")
    return -2.0 * p.g ** 2 * math.copysign(1.0, delta) / (abs(delta) + rabi_frequency(1, p))


def lamb_shift(p: ModelParams) -> float:
    delta = _require_detuning(p, "the Lamb shift −g²/Δ")
    return -p.g ** 2 / delta


def dressed_energies(p: ModelParams) -> Tuple[float, float]:
    """E_± = (ω_m + ω ± Ω₁)/2, measured from the |↓,0⟩ level."""
    om = rabi_frequency(1, p)
    base = p.omega_m + p.omega
    return 0.5 * (base + om), 0.5 * (base - om)


def period(p: ModelParams) -> float:
    om = rabi_frequency(1, p)
    if om == 0:
        raise ResonanceError("T = 2π/Ω₁ is undefined for Δ = 0 and g = 0")
    return 2.0 * math.pi / om


@dataclass(frozen=True, eq=False)
class ShiftProfile:
    """
    δω̃ sampled on regular (non-singular) times. Times where γ(t) vanishes
    are kept apart in singular_times and never carry a number.
    """
    times: np.ndarray
    shift: np.ndarray
    params: ModelParams
    singular_times: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        shift = np.asarray(self.shift, dtype=float)
        if times.shape != shift.shape:
            raise ValueError(f"times {times.shape} and shift {shift.shape} differ in shape")
        if times.size > 1 and np.any(np.diff(times) <= 0):
            raise ValueError("profile times must be strictly increasing")
        if not np.all(np.isfinite(shift)):
            raise ValueError("profile contains non-finite shift values")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "shift", shift)
        object.__setattr__(self, "singular_times", np.asarray(self.singular_times, dtype=float))

    @property
    def omega_tilde(self) -> np.ndarray:
        return self.params.omega + self.shift

    def rows(self):
        """(t, δω̃ or None) in time order, singular samples included."""
        merged = [(float(t), float(s)) for t, s in zip(self.times, self.shift)]
        merged += [(float(t), None) for t in self.singular_times]
        return sorted(merged, key=lambda r: r[0])


def shift_profile(times, p: ModelParams, route: str = "thermal") -> ShiftProfile:
    times = np.asarray(times, dtype=float)
    if route == "vacuum":
        return ShiftProfile(times=times, shift=np.atleast_1d(shift_vacuum(times, p)), params=p)
    if route != "thermal":
        raise ValueError(f"unknown route {route!r}; expected one of {ROUTES}")

    res = thermal_series(times, p)
    singular = np.abs(res.gamma) <= SINGULAR_GAMMA
    if np.any(singular):
        logger.warning("%d singular samples where |γ| <= %g", int(singular.sum()), SINGULAR_GAMMA)
    regular = ~singular
    shift = -(res.gamma_dot[regular] / res.gamma[regular]).imag
    return ShiftProfile(times=times[regular], shift=shift, params=p, singular_times=times[singular])


def period_average(p: ModelParams, route: str = "thermal", points: int = 10_001) -> float:
    """Trapezoid average of δω̃ over one period."""
    T = period(p)
    prof = shift_profile(np.linspace(0.0, T, points), p, route=route)
    if prof.singular_times.size:
        raise SingularTimeError(
            f"{prof.singular_times.size} singular samples inside [0, T]; period average undefined",
            time=float(prof.singular_times[0]),
        )
    return float(trapezoid(prof.shift, prof.times) / T)


def accumulated_phase(p: ModelParams, bare: bool = False) -> float:
    """
    Phase accumulated over one coupling period.

    Default: the echo-cancelled ∫₀ᵀ δω̃ dt, which is what the echo Ramsey
    sequence measures. bare=True adds ωT, i.e. ∫₀ᵀ ω̃ dt.
    """
    T = period(p)
    if p.nbar == 0:
        phase = average_shift_vacuum(p) * T
    else:
        phase = period_average(p, route="thermal") * T
    return phase + p.omega * T if bare else phase
