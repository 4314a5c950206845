"""
Virtual Ramsey experiments.

Two protocols:
- echo Ramsey for the period-averaged shift:
  |↓⟩ → π/2(0) → couple T → π(0) → free T → π/2(φ) → measure σ_z
- time-resolved Ramsey for the instantaneous shift:
  |↓⟩ → π/2(0) → couple t → basis rotation → measure σ_z

Pulses are instantaneous ideal rotations exp(−i(θ/2)(σ_x cos φ + σ_y sin φ))
on the spin. During the free arm the coupling is exactly zero.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Literal, Optional, Sequence

import numpy as np

from renorm_py.hilbert import (
    IDENTITY_2,
    SIGMA_X,
    SIGMA_Y,
    SPIN_DOWN,
    SpectralPropagator,
    check_cutoff,
    ket2dm,
    partial_trace_mode,
    tensor,
)
from renorm_py.models import ModelParams, build_hamiltonian, free_hamiltonian, jc_equivalent, thermal_mode_state
from renorm_py.renorm import period
from renorm_py.sampling import MeasurementRecord, ProjectionSampler

logger = logging.getLogger(__name__)

PulseKind = Literal["half_pi", "pi", "coupling", "wait"]
OBSERVABLES = ("sigma_x", "sigma_y", "sigma_z")
FRAMES = ("rotating", "lab")

_ANGLES = {"half_pi": math.pi / 2, "pi": math.pi}
# final π/2 phase that maps the observable onto σ_z; None means no pulse
_MEASUREMENT_PHASE = {"sigma_x": 1.5 * math.pi, "sigma_y": 0.0, "sigma_z": None}


@dataclass(frozen=True)
class PulseSpec:
    kind: PulseKind
    phase: float = 0.0
    duration: float = 0.0

    def __post_init__(self):
        if self.kind not in ("half_pi", "pi", "coupling", "wait"):
            raise ValueError(f"unknown pulse kind {self.kind!r}")
        if self.duration < 0:
            raise ValueError(f"duration must be >= 0, got {self.duration}")
        object.__setattr__(self, "phase", float(self.phase) % (2.0 * math.pi))


def spin_rotation(theta: float, phase: float) -> np.ndarray:
    axis = math.cos(phase) * SIGMA_X + math.sin(phase) * SIGMA_Y
    return math.cos(theta / 2) * IDENTITY_2 - 1j * math.sin(theta / 2) * axis


def apply_spin_pulse(state: np.ndarray, kind: str, phase: float) -> np.ndarray:
    """Rotate the spin factor of a composite (or bare 2×2) density matrix."""
    if kind not in _ANGLES:
        raise ValueError(f"{kind!r} is not an instantaneous spin pulse")
    rot = spin_rotation(_ANGLES[kind], phase)
    state = np.asarray(state, dtype=complex)
    m = state.shape[0] // 2
    rho4 = state.reshape(2, m, 2, m)
    out = np.einsum("as,smtn,bt->ambn", rot, rho4, rot.conj())
    return out.reshape(2 * m, 2 * m)


def _initial_state(p: ModelParams) -> np.ndarray:
    return tensor(ket2dm(SPIN_DOWN), thermal_mode_state(p))


def _prepare(state: np.ndarray) -> np.ndarray:
    return apply_spin_pulse(state, "half_pi", 0.0)


def _up_probability(spin: np.ndarray) -> float:
    return float(np.real(spin[0, 0]))


def _to_frame(spin: np.ndarray, spin_frequency: float, t: float, frame: str) -> np.ndarray:
    if frame == "lab":
        return spin
    if frame != "rotating":
        raise ValueError(f"unknown frame {frame!r}; expected one of {FRAMES}")
    r = np.diag([np.exp(0.5j * spin_frequency * t), np.exp(-0.5j * spin_frequency * t)])
    return r @ spin @ r.conj()


# ---------- echo Ramsey ----------

class RamseySequence:
    """
    A pulse list executed on spin ⊗ mode. Coupling segments use the model
    Hamiltonian, wait segments the bare one; propagators are built once per
    kind and reused.
    """

    def __init__(self, pulses: Sequence[PulseSpec]):
        self.pulses = list(pulses)

    @classmethod
    def echo(cls, duration: float, phase: float = 0.0, coupling_first: bool = True) -> "RamseySequence":
        return cls(echo_pulses(duration, phase, coupling_first=coupling_first))

    @property
    def duration(self) -> float:
        return sequence_duration(self.pulses)

    def run(self, p: ModelParams, model: str, check: bool = True) -> np.ndarray:
        """Final composite density matrix, starting from |↓⟩ ⊗ ρ_E."""
        props: Dict[str, SpectralPropagator] = {}
        state = _initial_state(p)
        for pulse in self.pulses:
            if pulse.kind in _ANGLES:
                state = apply_spin_pulse(state, pulse.kind, pulse.phase)
                continue
            if pulse.kind not in props:
                h = build_hamiltonian(p, model) if pulse.kind == "coupling" else free_hamiltonian(p, model)
                props[pulse.kind] = SpectralPropagator(h)
            state = props[pulse.kind].evolve(state, pulse.duration)
            if check:
                check_cutoff(state, p.n_max)
        return state


def echo_pulses(duration: float, phase: float = 0.0, coupling_first: bool = True) -> List[PulseSpec]:
    arms = [PulseSpec("coupling", duration=duration), PulseSpec("wait", duration=duration)]
    if not coupling_first:
        arms.reverse()
    return [PulseSpec("half_pi", 0.0), arms[0], PulseSpec("pi", 0.0), arms[1], PulseSpec("half_pi", phase)]


def sequence_duration(pulses: Sequence[PulseSpec]) -> float:
    return float(sum(p.duration for p in pulses))


def ramsey_time_average_exact(p: ModelParams, model: str, phases: Sequence[float],
                              coupling_first: bool = True, duration: Optional[float] = None) -> np.ndarray:
    """P(↑) after the echo sequence for every analysis phase, no sampling."""
    T = period(jc_equivalent(p, model)) if duration is None else duration
    body = RamseySequence(echo_pulses(T, coupling_first=coupling_first)[:-1])
    spin = partial_trace_mode(body.run(p, model), p.n_max)
    return np.array([_up_probability(apply_spin_pulse(spin, "half_pi", phi)) for phi in phases])


def ramsey_time_average(p: ModelParams, model: str, phases: Sequence[float], reps: int, seed: int,
                        coupling_first: bool = True) -> List[MeasurementRecord]:
    probs = ramsey_time_average_exact(p, model, phases, coupling_first=coupling_first)
    sampler = ProjectionSampler(seed)
    return sampler.draw_many(2.0 * probs - 1.0, reps, phases, label="p_up")


# ---------- time-resolved Ramsey ----------

def reduced_spin_states(p: ModelParams, model: str, times: Sequence[float], frame: str = "rotating",
                        check: bool = True) -> List[np.ndarray]:
    """Spin state after preparation and coupling for t, in the requested frame."""
    prop = SpectralPropagator(build_hamiltonian(p, model))
    start = _prepare(_initial_state(p))
    spin_frequency = jc_equivalent(p, model).omega
    states = []
    for t in times:
        rho = prop.evolve(start, t)
        if check:
            check_cutoff(rho, p.n_max)
        states.append(_to_frame(partial_trace_mode(rho, p.n_max), spin_frequency, t, frame))
    return states


def measured_expectation(spin: np.ndarray, observable: str) -> float:
    """⟨σ⟩ read out the way the experiment does: basis rotation, then P(↑)."""
    phase = _MEASUREMENT_PHASE[observable]
    if phase is not None:
        spin = apply_spin_pulse(spin, "half_pi", phase)
    return 2.0 * _up_probability(spin) - 1.0


def time_resolved_expectations(p: ModelParams, model: str, times: Sequence[float],
                               observables: Sequence[str] = OBSERVABLES,
                               frame: str = "rotating") -> Dict[str, np.ndarray]:
    for obs in observables:
        if obs not in _MEASUREMENT_PHASE:
            raise ValueError(f"unknown observable {obs!r}; expected one of {OBSERVABLES}")
    states = reduced_spin_states(p, model, times, frame=frame)
    return {obs: np.array([measured_expectation(s, obs) for s in states]) for obs in observables}


def ramsey_time_resolved(p: ModelParams, model: str, times: Sequence[float], observables: Sequence[str],
                         reps: int, seed: int, frame: str = "rotating") -> Dict[str, List[MeasurementRecord]]:
    exact = time_resolved_expectations(p, model, times, observables, frame=frame)
    sampler = ProjectionSampler(seed)
    out = {}
    for k, obs in enumerate(observables):
        out[obs] = sampler.draw_many(exact[obs], reps, times, offset=k * len(times), label=obs)
    logger.info("sampled %d settings x %d observables at %d reps", len(times), len(observables), reps)
    return out


