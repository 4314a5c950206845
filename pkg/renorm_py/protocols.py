"""
One executor per scenario protocol. Each returns result tables, grid
metadata and a one-line summary; nothing here prints or writes files.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterable, List, Optional, TypeVar

import numpy as np

from renorm_py.analysis import (
    TimeSeries,
    average_shift_from_phase,
    compare_models,
    fit_negative_cosine,
    larmor_zero_crossings,
)
from renorm_py.experiments import (
    RamseySequence,
    PulseSpec,
    apply_spin_pulse,
    ramsey_time_average_exact,
    time_resolved_expectations,
)
from renorm_py.errors import ScenarioError
from renorm_py.hilbert import partial_trace_mode
from renorm_py.models import ModelParams, build_hamiltonian, jc_equivalent, thermal_mode_state, with_detuning
from renorm_py.renorm import (
    accumulated_phase,
    average_shift_vacuum,
    lamb_shift,
    period,
    period_average,
    shift_profile,
)
from renorm_py.results import ResultTable
from renorm_py.sampling import ProjectionSampler
from renorm_py.scenario import Scenario
from renorm_py.tcl import generators, minimal_dissipation_split, reconstruct_maps

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


@dataclass
class ProtocolOutcome:
    tables: List[ResultTable]
    summary: str
    grids: Dict[str, Any] = field(default_factory=dict)
    singular: int = 0


def ordered_map(fn: Callable[[T], R], items: Iterable[T], workers: int = 1) -> List[R]:
    """map() that may fan out to threads; results keep input order."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _chunks(times: np.ndarray, workers: int) -> List[np.ndarray]:
    n = max(1, min(workers, len(times)))
    return [c for c in np.array_split(times, n) if c.size]


def _coupling_period(p: ModelParams, model: str) -> Optional[float]:
    jc = jc_equivalent(p, model)
    if jc.g == 0 and jc.detuning == 0:
        return None
    return period(jc)


def _predicted_average(jc: ModelParams) -> float:
    return average_shift_vacuum(jc) if jc.nbar == 0 else period_average(jc)


# ---------- shift_profile ----------

def run_shift_profile(sc: Scenario, p: ModelParams, workers: int = 1) -> ProtocolOutcome:
    settings = sc.protocol
    jc = jc_equivalent(p, sc.model)
    times = settings.times.resolve(_coupling_period(p, sc.model))
    parts = ordered_map(lambda c: shift_profile(c, jc, route=settings.route), _chunks(times, workers), workers)

    table = ResultTable("shift", ["t_s", "shift_rad_s", "shift_over_omega", "omega_tilde_rad_s"])
    singular = 0
    regular_t, regular_s = [], []
    for prof in parts:
        singular += prof.singular_times.size
        for t, s in prof.rows():
            if s is None:
                table.add(t, None, None, None)
            else:
                table.add(t, s, s / jc.omega, jc.omega + s)
                regular_t.append(t)
                regular_s.append(s)
    if regular_s:
        k = int(np.argmin(regular_s))
        summary = (f"shift_profile {sc.name}: min(shift)/omega = {regular_s[k] / jc.omega:.4f} "
                   f"at t = {regular_t[k]:.4e} s over {len(times)} samples")
    else:
        summary = f"shift_profile {sc.name}: every sample singular"
    return ProtocolOutcome([table], summary, grids={"times_s": times}, singular=singular)


# ---------- ramsey_average_sweep ----------

def _control_probabilities(p: ModelParams, model: str, phases: np.ndarray, duration: float) -> np.ndarray:
    # coupling arm replaced by free evolution of equal length
    seq = RamseySequence([
        PulseSpec("half_pi", 0.0),
        PulseSpec("wait", duration=duration),
        PulseSpec("pi", 0.0),
        PulseSpec("wait", duration=duration),
    ])
    spin = partial_trace_mode(seq.run(p, model), p.n_max)
    return np.array([float(np.real(apply_spin_pulse(spin, "half_pi", phi)[0, 0])) for phi in phases])


def run_ramsey_average_sweep(sc: Scenario, p: ModelParams, workers: int = 1) -> ProtocolOutcome:
    settings = sc.protocol
    phases = settings.phases.resolve()
    g = jc_equivalent(p, sc.model).g
    ratios = list(settings.detunings_over_g)

    def one(indexed):
        k, ratio = indexed
        pd = with_detuning(p, ratio * g, sc.model)
        jc = jc_equivalent(pd, sc.model)
        T = period(jc)
        exact = ramsey_time_average_exact(pd, sc.model, phases, coupling_first=settings.coupling_first)
        records = None
        fit_data = exact
        if settings.reps > 0:
            sampler = ProjectionSampler(settings.seed)
            records = sampler.draw_many(2.0 * exact - 1.0, settings.reps, phases, offset=k * len(phases))
            fit_data = np.array([r.p_up for r in records])
        fit = fit_negative_cosine(phases, fit_data)
        control = None
        if settings.control:
            control = fit_negative_cosine(phases, _control_probabilities(pd, sc.model, phases, T)).phase
        return {
            "ratio": ratio,
            "jc": jc,
            "T": T,
            "exact": exact,
            "records": records,
            "fit": fit,
            "shift": average_shift_from_phase(fit, jc, coupling_first=settings.coupling_first),
            "predicted": _predicted_average(jc),
            "lamb": lamb_shift(jc),
            "raw_phase": accumulated_phase(jc, bare=True),
            "control": control,
        }

    results = ordered_map(one, list(enumerate(ratios)), workers)

    sweep = ResultTable("sweep", [
        "detuning_over_g", "delta_rad_s", "period_s", "fit_phase_rad", "fit_contrast", "shift_fit_rad_s",
        "shift_predicted_rad_s", "lamb_shift_rad_s", "raw_phase_rad", "control_phase_rad",
    ])
    points = ResultTable("points", ["detuning_over_g", "phase_rad", "p_up_exact", "up_counts", "reps", "p_up_estimate"])
    worst = 0.0
    for r in results:
        jc = r["jc"]
        sweep.add(r["ratio"], jc.detuning, r["T"], r["fit"].phase, r["fit"].contrast, r["shift"],
                  r["predicted"], r["lamb"], r["raw_phase"], r["control"])
        for i, phi in enumerate(phases):
            rec = r["records"][i] if r["records"] is not None else None
            points.add(r["ratio"], phi, r["exact"][i],
                       rec.up_counts if rec else None, rec.repetitions if rec else None,
                       rec.p_up if rec else None)
        worst = max(worst, abs(r["shift"] / r["predicted"] - 1.0))
    summary = (f"ramsey_average_sweep {sc.name}: {len(results)} detunings, "
               f"max |fit/predicted - 1| = {worst:.3e}")
    return ProtocolOutcome([sweep, points], summary,
                           grids={"detunings_over_g": ratios, "phases_rad": phases})


# ---------- time_resolved ----------

def run_time_resolved(sc: Scenario, p: ModelParams, workers: int = 1) -> ProtocolOutcome:
    settings = sc.protocol
    jc = jc_equivalent(p, sc.model)
    times = settings.times.resolve(_coupling_period(p, sc.model))
    observables = list(settings.observables)

    parts = ordered_map(
        lambda c: time_resolved_expectations(p, sc.model, c, observables, frame=settings.frame),
        _chunks(times, workers), workers,
    )
    exact = {o: np.concatenate([part[o] for part in parts]) for o in observables}

    tables = []
    measured = {}
    sampler = ProjectionSampler(settings.seed) if settings.reps > 0 else None
    for k, obs in enumerate(observables):
        table = ResultTable(obs, ["t_s", "exact", "up_counts", "reps", "estimate"])
        if sampler is not None:
            records = sampler.draw_many(exact[obs], settings.reps, times, offset=k * len(times), label=obs)
            for t, e, rec in zip(times, exact[obs], records):
                table.add(t, e, rec.up_counts, rec.repetitions, rec.estimate)
            measured[obs] = np.array([rec.estimate for rec in records])
        else:
            for t, e in zip(times, exact[obs]):
                table.add(t, e, None, None, None)
            measured[obs] = exact[obs]
        tables.append(table)

    summary = f"time_resolved {sc.name}: {len(times)} points x {len(observables)} observables"
    singular = 0
    if settings.larmor is not None:
        est = larmor_zero_crossings(
            TimeSeries(times, measured[settings.larmor.observable]), jc.omega,
            cluster_fraction=settings.larmor.cluster_fraction,
        )
        prof = shift_profile(est.times, jc, route="thermal")
        predicted = dict(zip(prof.times.tolist(), prof.shift.tolist()))
        singular = prof.singular_times.size
        larmor = ResultTable("larmor", ["t_mid_s", "omega_l_rad_s", "shift_estimate_over_omega",
                                        "shift_predicted_over_omega"])
        for t, w in zip(est.times, est.omega_l):
            s = predicted.get(float(t))
            larmor.add(t, w, (w - jc.omega) / jc.omega, None if s is None else s / jc.omega)
        tables.append(larmor)
        peak = float(np.max(np.abs(est.omega_l - jc.omega)) / jc.omega)
        summary += f", max |shift|/omega from zero crossings = {peak:.4f}"
    return ProtocolOutcome(tables, summary, grids={"times_s": times}, singular=singular)


# ---------- compare_models ----------

def run_compare_models(sc: Scenario, p: ModelParams, workers: int = 1) -> ProtocolOutcome:
    settings = sc.protocol
    times = settings.times.resolve(_coupling_period(p, settings.candidate))
    if times[0] != 0.0:
        raise ScenarioError("compare_models starts both models at t = 0; set times.start to 0")
    cmp = compare_models(p, float(times[-1]), len(times), reference=settings.reference,
                         candidate=settings.candidate, frame=settings.frame)
    axes = ("sigma_x", "sigma_y", "sigma_z")
    columns = ["t_s"]
    columns += [f"{settings.reference}_{o}" for o in axes]
    columns += [f"{settings.candidate}_{o}" for o in axes]
    columns += [f"diff_{o}" for o in axes]
    columns += ["trace_distance"]
    table = ResultTable("comparison", columns)
    for i, t in enumerate(cmp.times):
        table.add(t, *[cmp.reference[o].values[i] for o in axes], *[cmp.candidate[o].values[i] for o in axes],
                  *[cmp.difference[o].values[i] for o in axes], cmp.trace_distance.values[i])
    summary = (f"compare_models {sc.name}: {settings.reference} vs {settings.candidate}, "
               f"max trace distance = {cmp.max_trace_distance:.3e}")
    return ProtocolOutcome([table], summary, grids={"times_s": cmp.times})


# ---------- tcl_extract ----------

def run_tcl_extract(sc: Scenario, p: ModelParams, workers: int = 1) -> ProtocolOutcome:
    settings = sc.protocol
    jc = jc_equivalent(p, sc.model)
    times = settings.times.resolve(_coupling_period(p, sc.model))
    h = build_hamiltonian(p, sc.model)
    rho_e = thermal_mode_state(p)
    parts = ordered_map(lambda c: reconstruct_maps(h, rho_e, c), _chunks(times, workers), workers)
    maps = [m for part in parts for m in part]
    gens, singular = generators(maps)

    analytic = {}
    if jc.g > 0 or jc.detuning != 0:
        prof = shift_profile(times, jc, route="thermal")
        analytic = dict(zip(prof.times.tolist(), prof.shift.tolist()))

    table = ResultTable("generator", [
        "t_s", "omega_tilde_rad_s", "shift_rad_s", "shift_analytic_rad_s", "gamma_plus", "gamma_minus",
        "gamma_z", "remainder", "rate_1", "rate_2", "rate_3",
    ])
    for m, G in zip(maps, gens):
        a = analytic.get(m.time)
        if G is None:
            table.add(m.time, None, None, a, None, None, None, None, None, None, None)
            continue
        split = minimal_dissipation_split(G, m.time)
        c = split.coefficients()
        table.add(m.time, c.omega_tilde, c.omega_tilde - jc.omega, a, c.gamma_plus, c.gamma_minus,
                  c.gamma_z, c.remainder, *split.rates)
    summary = f"tcl_extract {sc.name}: {len(maps)} maps, {len(singular)} singular"
    return ProtocolOutcome([table], summary, grids={"times_s": times}, singular=len(singular))


RUNNERS: Dict[str, Callable[[Scenario, ModelParams, int], ProtocolOutcome]] = {
    "shift_profile": run_shift_profile,
    "ramsey_average_sweep": run_ramsey_average_sweep,
    "time_resolved": run_time_resolved,
    "compare_models": run_compare_models,
    "tcl_extract": run_tcl_extract,
}


def run_protocol(sc: Scenario, workers: int = 1) -> ProtocolOutcome:
    p = sc.model_params()
    logger.info("running %s (%s, model %s)", sc.name, sc.protocol.kind, sc.model)
    return RUNNERS[sc.protocol.kind](sc, p, workers)
