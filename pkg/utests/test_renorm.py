import math

import numpy as np
import pytest

from renorm_py.errors import ResonanceError, SeriesConvergenceError, SingularTimeError
from renorm_py.models import ModelParams
from renorm_py.renorm import (
    RabiLadder,
    accumulated_phase,
    average_shift_vacuum,
    coeff_c,
    coeff_c_dot,
    dressed_energies,
    gamma_thermal,
    gamma_thermal_derivative,
    lamb_shift,
    period,
    period_average,
    rabi_frequency,
    shift_profile,
    shift_thermal,
    shift_vacuum,
    thermal_series,
)

G = 2 * math.pi * 0.078e6
OMEGA = 2 * math.pi * 1.24e6
RATIOS = [0.5, -0.5, 0.8, -0.8, 2.0, -2.0, 5.0, -5.0]


def params(ratio, nbar=0.0, g=G):
    return ModelParams(omega=OMEGA, omega_m=OMEGA + ratio * g, g=g, nbar=nbar)


@pytest.mark.parametrize("ratio", RATIOS)
def test_peak_shift_at_half_period(ratio):
    p = params(ratio)
    expected = -2 * G ** 2 / p.detuning
    assert shift_vacuum(period(p) / 2, p) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("ratio", RATIOS)
def test_period_average_matches_closed_form(ratio):
    p = params(ratio)
    assert period_average(p, route="vacuum") == pytest.approx(average_shift_vacuum(p), rel=1e-6)


@pytest.mark.parametrize("ratio", RATIOS)
def test_average_shift_lands_on_dressed_level(ratio):
    p = params(ratio)
    e_plus, e_minus = dressed_energies(p)
    target = e_minus if ratio > 0 else e_plus
    assert p.omega + average_shift_vacuum(p) == pytest.approx(target, rel=1e-12)


@pytest.mark.parametrize("sign", [1, -1])
def test_dispersive_limit_is_lamb_shift(sign):
    # scaled units keep ω_m = ω − 100g positive
    g = 1e-3
    p = ModelParams(omega=1.0, omega_m=1.0 + 100.0 * sign * g, g=g)
    assert p.detuning == pytest.approx(0.1 * sign)
    lamb = lamb_shift(p)
    assert lamb == pytest.approx(-g ** 2 / p.detuning)
    assert abs(average_shift_vacuum(p) - lamb) / abs(lamb) < 1e-3


def test_vacuum_shift_profile_shape():
    p = params(0.8)
    T = period(p)
    t = np.linspace(0, T, 101)
    s = shift_vacuum(t, p)
    assert s[0] == 0.0
    assert abs(s[-1]) < 1e-20 * G
    # negative for Δ > 0, periodic
    assert np.all(s <= 0)
    assert shift_vacuum(0.3 * T, p) == pytest.approx(shift_vacuum(1.3 * T, p), rel=1e-9)
    assert np.all(shift_vacuum(t, params(-0.8)) >= 0)


def test_rabi_ladder():
    p = params(0.8)
    assert rabi_frequency(0, p) == pytest.approx(abs(p.detuning))
    assert RabiLadder.from_params(2, p).omega_n == pytest.approx(math.sqrt(p.detuning ** 2 + 8 * G ** 2))
    with pytest.raises(ValueError):
        RabiLadder(-1, 1.0)


def test_coefficients():
    p = params(0.8)
    t = np.linspace(0, 3 * period(p), 50)
    assert np.allclose(coeff_c(0, t, p), 1.0)
    assert np.allclose(coeff_c_dot(0, t, p), 0.0)
    # the one-excitation amplitude never leaves the unit disc
    assert np.all(np.abs(coeff_c(3, t, p)) <= 1 + 1e-12)


@pytest.mark.parametrize("n", [1, 2, 5])
def test_coefficient_derivative_against_finite_difference(n):
    p = params(-1.3)
    t = 0.37 * period(p)
    h = 1e-6 * period(p)
    numeric = (coeff_c(n, t + h, p) - coeff_c(n, t - h, p)) / (2 * h)
    assert coeff_c_dot(n, t, p) == pytest.approx(numeric, rel=1e-6)


def test_coefficient_finite_at_vanishing_rabi_frequency():
    p = ModelParams(omega=1.0, omega_m=1.0, g=0.1)
    # Δ = 0: c(n, t) = cos(g√n t)
    t = np.array([0.0, 1.0, 2.5])
    assert np.allclose(coeff_c(4, t, p), np.cos(0.2 * t))


@pytest.mark.parametrize("nbar", [0.0, 0.08, 0.2])
def test_gamma_starts_at_one(nbar):
    p = params(0.8, nbar=nbar)
    assert gamma_thermal(0.0, p) == pytest.approx(1.0, abs=1e-12)


def test_gamma_derivative_against_finite_difference():
    p = params(1.1, nbar=0.3)
    t = 0.41 * period(p)
    h = 1e-6 * period(p)
    numeric = (gamma_thermal(t + h, p) - gamma_thermal(t - h, p)) / (2 * h)
    assert gamma_thermal_derivative(t, p) == pytest.approx(numeric, rel=1e-6)


def test_thermal_shift_reduces_to_vacuum():
    p_cold = params(0.8, nbar=1e-12)
    p_vac = params(0.8)
    for frac in (0.1, 0.35, 0.5, 0.77):
        t = frac * period(p_vac)
        assert shift_thermal(t, p_cold) == pytest.approx(shift_vacuum(t, p_vac), rel=1e-9)


def test_thermal_series_needs_more_terms_when_hot():
    t = np.linspace(0, 1e-5, 7)
    cold = thermal_series(t, params(0.8, nbar=0.0))
    warm = thermal_series(t, params(0.8, nbar=2.0))
    assert cold.terms <= 2
    assert warm.terms > cold.terms
    with pytest.raises(SeriesConvergenceError):
        thermal_series(t, params(0.8, nbar=50.0), cap=5)


@pytest.mark.parametrize("nbar", [0.01, 0.08, 0.2])
def test_thermal_series_is_short_when_cold(nbar):
    p = params(0.8, nbar=nbar)
    res = thermal_series(np.linspace(0, 2 * period(p), 41), p)
    assert res.terms <= 60


def test_singular_time_on_resonance():
    g = 0.05
    p = ModelParams(omega=1.0, omega_m=1.0, g=g)
    t_zero = math.pi / (2 * g)
    with pytest.raises(SingularTimeError) as err:
        shift_thermal(t_zero, p)
    assert err.value.time == pytest.approx(t_zero)

    prof = shift_profile(np.linspace(0, math.pi / g, 3), p)
    assert prof.singular_times.tolist() == pytest.approx([t_zero])
    rows = prof.rows()
    assert [r[1] is None for r in rows] == [False, True, False]


def test_detuning_formulas_reject_resonance():
    p = ModelParams(omega=1.0, omega_m=1.0, g=0.05)
    for fn in (shift_vacuum, lambda t, q: average_shift_vacuum(q), lambda t, q: lamb_shift(q)):
        with pytest.raises(ResonanceError):
            fn(0.1, p)
    with pytest.raises(ResonanceError):
        period(ModelParams(omega=1.0, omega_m=1.0, g=0.0))


def test_profile_routes_agree_in_vacuum():
    p = params(-2.0)
    t = np.linspace(0, 2 * period(p), 301)
    thermal = shift_profile(t, p, route="thermal")
    vacuum = shift_profile(t, p, route="vacuum")
    assert thermal.singular_times.size == 0
    assert np.allclose(thermal.shift, vacuum.shift, rtol=1e-9, atol=1e-9 * G)
    assert np.allclose(vacuum.omega_tilde, OMEGA + vacuum.shift)
    with pytest.raises(ValueError):
        shift_profile(t, p, route="numerical")


def test_accumulated_phase():
    p = params(1.5)
    T = period(p)
    assert accumulated_phase(p) == pytest.approx(average_shift_vacuum(p) * T)
    assert accumulated_phase(p, bare=True) == pytest.approx(average_shift_vacuum(p) * T + OMEGA * T)
    warm = params(1.5, nbar=0.1)
    assert accumulated_phase(warm) == pytest.approx(period_average(warm) * T)
