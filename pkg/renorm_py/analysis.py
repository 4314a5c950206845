"""
Analysis of the virtual measurements.

- fit_negative_cosine: closed-form least squares of P(↑)(φ) against
  −(C/2)cos(φ + φ̃) + offset, giving the accumulated echo phase φ̃
- larmor_zero_crossings: instantaneous Larmor frequency from the spacing
  of clustered zero crossings, ω_L = π/(t_{i+1} − t_i)
- compare_models: JC against a trapped-ion model from identical initial
  states, with the trace distance of the reduced spin states
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from renorm_py.errors import DegenerateFitError, PhaseWrapError, ResonanceError
from renorm_py.experiments import OBSERVABLES, measured_expectation, reduced_spin_states
from renorm_py.hilbert import trace_distance
from renorm_py.models import ModelParams, map_ti_to_jc
from renorm_py.renorm import accumulated_phase, period

logger = logging.getLogger(__name__)

MIN_FIT_PHASES = 5
CLUSTER_FRACTION = 0.25
MIN_SAMPLES_PER_PERIOD = 20


# ---------- negative cosine ----------

@dataclass(frozen=True)
class CosineFit:
    contrast: float
    phase: float
    residual_rms: float
    offset: float = 0.5


def fit_negative_cosine(phases: Sequence[float], p_up: Sequence[float],
                        weights: Optional[Sequence[float]] = None) -> CosineFit:
    """
    Linear least squares on the regressors (cos φ, sin φ, 1):
    P = a cos φ + b sin φ + c, C = 2√(a² + b²), φ̃ = atan2(b, −a).
    """
    phi = np.asarray(phases, dtype=float)
    y = np.asarray(p_up, dtype=float)
    if phi.shape != y.shape or phi.ndim != 1:
        raise ValueError(f"phases {phi.shape} and estimates {y.shape} must be matching 1-d arrays")
    distinct = np.unique(np.round(np.mod(phi, 2 * math.pi), 12))
    if distinct.size < MIN_FIT_PHASES:
        raise DegenerateFitError(f"need >= {MIN_FIT_PHASES} distinct phases, got {distinct.size}")
    if np.ptp(phi) < math.pi - 1e-12:
        raise DegenerateFitError(f"phases span {np.ptp(phi):.3f} rad; need at least π")

    design = np.column_stack([np.cos(phi), np.sin(phi), np.ones_like(phi)])
    if weights is None:
        sw = np.ones_like(phi)
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != phi.shape or np.any(w < 0):
            raise ValueError("weights must be non-negative and match phases")
        sw = np.sqrt(w)
    coef, _, rank, _ = np.linalg.lstsq(design * sw[:, None], y * sw, rcond=None)
    if rank < 3:
        raise DegenerateFitError("cosine design matrix is rank deficient")
    a, b, c = coef
    phase = math.atan2(b, -a)
    if phase <= -math.pi:
        phase = math.pi
    residual = y - design @ coef
    return CosineFit(
        contrast=2.0 * math.hypot(a, b),
        phase=phase,
        residual_rms=float(np.sqrt(np.mean(residual ** 2))),
        offset=float(c),
    )


def average_shift_from_phase(fit: CosineFit, p: ModelParams, expected_phase: Optional[float] = None,
                             coupling_first: bool = True) -> float:
    """
    ⟨δω̃⟩ = φ̃/T. The principal value is only trusted while the predicted
    phase stays inside (−π, π); otherwise PhaseWrapError.

    With the free arm first the π pulse conjugates the free phase instead
    of the coupled one, so the fitted phase enters with the opposite sign.
    """
    if p.detuning == 0:
        raise ResonanceError("⟨δω̃⟩ = φ̃/T(Δ) needs Δ ≠ 0")
    T = period(p)
    expected = accumulated_phase(p) if expected_phase is None else expected_phase
    if abs(expected) >= math.pi:
        raise PhaseWrapError(
            f"predicted echo phase {expected:.3f} rad is outside (−π, π); principal value is ambiguous"
        )
    phase = fit.phase if coupling_first else -fit.phase
    return phase / T


# ---------- zero crossings ----------

@dataclass(frozen=True, eq=False)
class TimeSeries:
    times: np.ndarray
    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.shape != v.shape or t.ndim != 1:
            raise ValueError(f"times {t.shape} and values {v.shape} must be matching 1-d arrays")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise ValueError("series times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)


@dataclass(frozen=True, eq=False)
class LarmorEstimate:
    times: np.ndarray
    omega_l: np.ndarray
    crossings: np.ndarray = field(default_factory=lambda: np.empty(0))


def zero_crossings(series: TimeSeries) -> np.ndarray:
    """Sign-change times by linear interpolation; exact zeros count when the sign flips across them."""
    t, v = series.times, series.values
    s = np.sign(v)
    out = []
    for i in range(len(v) - 1):
        if s[i] * s[i + 1] < 0:
            out.append(t[i] - v[i] * (t[i + 1] - t[i]) / (v[i + 1] - v[i]))
        elif s[i + 1] == 0 and 0 < i + 1 < len(v) - 1 and s[i] * s[i + 2] < 0:
            out.append(t[i + 1])
    return np.array(out)


def cluster_crossings(crossings: Sequence[float], radius: float) -> np.ndarray:
    """Chain crossings closer than radius into clusters; each is replaced by its median."""
    c = np.sort(np.asarray(crossings, dtype=float))
    if c.size == 0:
        return c
    groups: List[List[float]] = [[c[0]]]
    for x in c[1:]:
        if x - groups[-1][-1] < radius:
            groups[-1].append(x)
        else:
            groups.append([x])
    return np.array([np.median(g) for g in groups])


def larmor_zero_crossings(signal: TimeSeries, omega_hint: float,
                          cluster_fraction: float = CLUSTER_FRACTION) -> LarmorEstimate:
    if omega_hint <= 0:
        raise ValueError(f"omega_hint must be > 0, got {omega_hint}")
    hint_period = 2.0 * math.pi / omega_hint
    if signal.times.size < 2:
        raise ValueError("signal needs at least two samples")
    step = float(np.median(np.diff(signal.times)))
    if step > hint_period / MIN_SAMPLES_PER_PERIOD:
        raise ValueError(
            f"signal sampled at {hint_period / step:.1f} points per period; need >= {MIN_SAMPLES_PER_PERIOD}"
        )
    centres = cluster_crossings(zero_crossings(signal), cluster_fraction * hint_period)
    if centres.size < 2:
        raise ValueError(f"found {centres.size} crossing cluster(s); need at least 2")
    gaps = np.diff(centres)
    return LarmorEstimate(times=centres[:-1] + 0.5 * gaps, omega_l=math.pi / gaps, crossings=centres)


# ---------- model comparison ----------

@dataclass(frozen=True, eq=False)
class ModelComparison:
    """Per-observable TimeSeries of both models, their difference and the spin trace distance."""
    times: np.ndarray
    reference: Dict[str, TimeSeries]
    candidate: Dict[str, TimeSeries]
    difference: Dict[str, TimeSeries]
    trace_distance: TimeSeries
    reference_model: str = "jc"
    candidate_model: str = "ti_full"

    @property
    def max_trace_distance(self) -> float:
        return float(np.max(self.trace_distance.values))


def _model_params(p: ModelParams, model: str) -> ModelParams:
    # TI parameters drive the JC reference through the mapping
    if model == "jc" and p.omega_star is not None:
        return map_ti_to_jc(p)
    return p


def compare_models(p: ModelParams, duration: float, grid: int, reference: str = "jc",
                   candidate: str = "ti_full", frame: str = "rotating") -> ModelComparison:
    if grid < 2:
        raise ValueError(f"grid needs at least 2 points, got {grid}")
    if not duration > 0:
        raise ValueError(f"duration must be > 0, got {duration}")
    times = np.linspace(0.0, duration, grid)
    ref_states = reduced_spin_states(_model_params(p, reference), reference, times, frame=frame)
    cand_states = reduced_spin_states(_model_params(p, candidate), candidate, times, frame=frame)

    ref = {o: TimeSeries(times, [measured_expectation(s, o) for s in ref_states], o) for o in OBSERVABLES}
    cand = {o: TimeSeries(times, [measured_expectation(s, o) for s in cand_states], o) for o in OBSERVABLES}
    diff = {o: TimeSeries(times, cand[o].values - ref[o].values, o) for o in OBSERVABLES}
    dist = TimeSeries(times, [trace_distance(a, b) for a, b in zip(ref_states, cand_states)], "trace_distance")
    logger.info("compare %s vs %s: max trace distance %.3e", reference, candidate, dist.values.max())
    return ModelComparison(
        times=times, reference=ref, candidate=cand, difference=diff, trace_distance=dist,
        reference_model=reference, candidate_model=candidate,
    )
