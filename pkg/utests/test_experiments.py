import math
import unittest

import numpy as np
import pytest

from renorm_py.analysis import average_shift_from_phase, fit_negative_cosine
from renorm_py.errors import CutoffError
from renorm_py.experiments import (
    PulseSpec,
    RamseySequence,
    apply_spin_pulse,
    echo_pulses,
    measured_expectation,
    ramsey_time_average,
    ramsey_time_average_exact,
    ramsey_time_resolved,
    reduced_spin_states,
    sequence_duration,
    spin_rotation,
    time_resolved_expectations,
)
from renorm_py.hilbert import SPIN_DOWN, SpinState, ket2dm
from renorm_py.models import ModelParams
from renorm_py.renorm import average_shift_vacuum, period

OMEGA = 2 * math.pi * 1.24e6
G = 2 * math.pi * 0.065e6
PHASES = np.linspace(0, 2 * math.pi, 12, endpoint=False)


def jc(ratio, g=G, n_max=4):
    return ModelParams(omega=OMEGA, omega_m=OMEGA + ratio * G, g=g, n_max=n_max)


class TestPulses(unittest.TestCase):
    def test_phase_is_normalised(self):
        self.assertAlmostEqual(PulseSpec("half_pi", -math.pi / 2).phase, 1.5 * math.pi)
        self.assertAlmostEqual(PulseSpec("pi", 5 * math.pi).phase, math.pi)

    def test_invalid_pulses(self):
        with self.assertRaises(ValueError):
            PulseSpec("flip")
        with self.assertRaises(ValueError):
            PulseSpec("wait", duration=-1.0)
        with self.assertRaises(ValueError):
            apply_spin_pulse(ket2dm(SPIN_DOWN), "wait", 0.0)

    def test_rotation_is_unitary(self):
        u = spin_rotation(0.7, 1.9)
        self.assertTrue(np.allclose(u @ u.conj().T, np.eye(2)))

    def test_half_pi_prepares_plus_y(self):
        spin = apply_spin_pulse(ket2dm(SPIN_DOWN), "half_pi", 0.0)
        x, y, z = SpinState(spin).bloch
        self.assertAlmostEqual(x, 0.0)
        self.assertAlmostEqual(y, 1.0)
        self.assertAlmostEqual(z, 0.0)

    def test_echo_layout(self):
        pulses = echo_pulses(2.0, 0.4)
        self.assertEqual([p.kind for p in pulses], ["half_pi", "coupling", "pi", "wait", "half_pi"])
        self.assertEqual(sequence_duration(pulses), 4.0)
        swapped = echo_pulses(2.0, coupling_first=False)
        self.assertEqual([p.kind for p in swapped][1:4], ["wait", "pi", "coupling"])
        self.assertEqual(RamseySequence.echo(1.5).duration, 3.0)


@pytest.mark.parametrize("bloch", [(0.3, -0.5, 0.2), (0.0, 0.0, -1.0), (-0.6, 0.6, 0.1)])
def test_readout_rotations_measure_each_axis(bloch):
    spin = SpinState.from_bloch(*bloch).matrix
    got = tuple(measured_expectation(spin, o) for o in ("sigma_x", "sigma_y", "sigma_z"))
    assert got == pytest.approx(bloch, abs=1e-12)


def test_echo_without_coupling_has_no_phase():
    p = jc(2.0, g=0.0)
    probs = ramsey_time_average_exact(p, "jc", PHASES)
    assert np.allclose(probs, 0.5 * (1 - np.cos(PHASES)), atol=1e-10)
    fit = fit_negative_cosine(PHASES, probs)
    assert abs(fit.phase) < 1e-10
    assert fit.contrast == pytest.approx(1.0)


@pytest.mark.parametrize("ratio", [1.0, 1.5, 2.0, 3.0, 4.0, 6.0, -2.0, -5.0])
def test_echo_fit_recovers_average_shift(ratio):
    p = jc(ratio)
    fit = fit_negative_cosine(PHASES, ramsey_time_average_exact(p, "jc", PHASES))
    assert average_shift_from_phase(fit, p) == pytest.approx(average_shift_vacuum(p), rel=0.02)
    # vacuum: the mode is back in |0⟩ after one period, so the contrast is full
    assert fit.contrast == pytest.approx(1.0, abs=1e-6)


def test_echo_arm_order_flips_the_phase():
    p = jc(2.0)
    first = fit_negative_cosine(PHASES, ramsey_time_average_exact(p, "jc", PHASES, coupling_first=True))
    last = fit_negative_cosine(PHASES, ramsey_time_average_exact(p, "jc", PHASES, coupling_first=False))
    assert last.phase == pytest.approx(-first.phase, abs=1e-9)
    assert average_shift_from_phase(last, p, coupling_first=False) == pytest.approx(
        average_shift_from_phase(first, p))


def test_sampled_echo_is_reproducible():
    p = jc(3.0)
    a = ramsey_time_average(p, "jc", PHASES, reps=200, seed=9)
    b = ramsey_time_average(p, "jc", PHASES, reps=200, seed=9)
    assert [r.up_counts for r in a] == [r.up_counts for r in b]
    assert [r.setting for r in a] == pytest.approx(PHASES.tolist())


def test_rotating_frame_is_stationary_without_coupling():
    p = jc(2.0, g=0.0)
    times = np.linspace(0, 3 * period(p), 7)
    for s in reduced_spin_states(p, "jc", times, frame="rotating"):
        assert SpinState(s).bloch == pytest.approx((0.0, 1.0, 0.0), abs=1e-9)
    lab = time_resolved_expectations(p, "jc", times, ["sigma_y"], frame="lab")["sigma_y"]
    assert np.allclose(lab, np.cos(OMEGA * times), atol=1e-9)


def test_time_resolved_coherence_follows_gamma():
    p = jc(0.8)
    times = np.linspace(0, period(p), 9)
    ex = time_resolved_expectations(p, "jc", times, ["sigma_x", "sigma_y", "sigma_z"])
    # vacuum, phase-covariant: |⟨σ_x⟩ + i⟨σ_y⟩| equals |γ(t)|
    delta, om = p.detuning, math.sqrt(p.detuning ** 2 + 4 * G ** 2)
    gamma_abs = np.sqrt(np.cos(om * times / 2) ** 2 + (delta / om * np.sin(om * times / 2)) ** 2)
    assert np.allclose(np.hypot(ex["sigma_x"], ex["sigma_y"]), gamma_abs, atol=1e-9)
    with pytest.raises(ValueError):
        time_resolved_expectations(p, "jc", times, ["sigma_w"])


def test_sampled_time_resolved_streams_are_per_observable():
    p = jc(0.8)
    times = np.linspace(0, period(p), 5)
    out = ramsey_time_resolved(p, "jc", times, ["sigma_x", "sigma_y"], reps=100, seed=4)
    assert [r.index for r in out["sigma_y"]] == [5, 6, 7, 8, 9]
    assert all(r.label == "sigma_x" for r in out["sigma_x"])


def test_cutoff_is_enforced():
    hot = ModelParams(omega=OMEGA, omega_m=OMEGA + G, g=G, nbar=3.0, n_max=6)
    with pytest.raises(CutoffError):
        ramsey_time_average_exact(hot, "jc", PHASES)
