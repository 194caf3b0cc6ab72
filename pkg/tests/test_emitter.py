import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import solve_ivp

from photongun.emitter import (EmitterParams, ExcitationConfig, SaturationParams, dark_period,
                               detected_rate, excited_population, shelving_occupancy,
                               solve_saturation_energy, triplet_branching)
from photongun.errors import DomainError


def rho_ode(x, tau_p, tau_r):
    """Integrate d rho/dt = W(1 - rho) - rho/tau_r over the pulse, W = x/tau_r.

    Time is measured in units of tau_r, so the span is tau_p/tau_r.
    """
    sol = solve_ivp(lambda s, y: x * (1 - y) - y, (0.0, tau_p / tau_r), [0.0],
                    method="DOP853", rtol=1e-13, atol=1e-30)
    return sol.y[0, -1]


ODE_GRID = [(x, r) for x in np.geomspace(1e-3, 1e4, 8) for r in np.geomspace(1e-4, 10, 6)]


@pytest.mark.parametrize("x,ratio", ODE_GRID)
def test_closed_form_matches_rate_equation(x, ratio):
    tau_r = 1e-8
    exact = rho_ode(x, ratio * tau_r, tau_r)
    assert excited_population(x, 1.0, ratio * tau_r, tau_r) == pytest.approx(exact, rel=1e-9)


def test_reference_point_x50():
    assert excited_population(50.0, 1.0, 0.1, 1.0) == pytest.approx(rho_ode(50.0, 0.1, 1.0), rel=1e-9)


def test_limits():
    assert excited_population(0.0, 1.0, 1e-11, 1e-8) == 0.0
    assert excited_population(1e9, 1.0, 1e-3, 1.0) == pytest.approx(1.0, abs=1e-6)
    assert excited_population(1e9, 1.0, 1e-3, 1.0) < 1.0


def test_array_input_matches_scalar():
    E = np.array([0.0, 0.1, 1.0, 10.0])
    arr = excited_population(E, 0.5, 1e-9, 1e-8)
    assert arr.shape == E.shape
    assert np.allclose(arr, [excited_population(e, 0.5, 1e-9, 1e-8) for e in E], rtol=0, atol=0)


@pytest.mark.parametrize("args", [(1.0, 0.0, 1e-9, 1e-8), (1.0, 1.0, 0.0, 1e-8), (1.0, 1.0, 1e-9, -1.0),
                                  (-1.0, 1.0, 1e-9, 1e-8)])
def test_domain_errors(args):
    with pytest.raises(DomainError):
        excited_population(*args)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0, 1e5, allow_nan=False), min_size=2, max_size=30),
       st.floats(1e-3, 10), st.floats(1e-4, 10))
def test_monotone_and_bounded(energies, E_s, ratio):
    E = np.sort(np.array(energies))
    rho = excited_population(E, E_s, ratio, 1.0)
    assert np.all(np.diff(rho) >= 0)
    assert np.all((rho >= 0) & (rho < 1))


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 1e4), st.floats(1, 1e5), st.floats(1e-3, 10), st.floats(0, 100))
def test_rate_minus_background_bounded_by_R0(E, R0, E_s, alpha):
    p = SaturationParams(R0, E_s, alpha, 13e-12, 1e-8)
    assert detected_rate(E, p) - alpha * E <= R0 * (1 + 1e-12)
    assert detected_rate(E, p) >= 0


def test_detected_rate_examples():
    p = SaturationParams(10200.0, 0.05, 0.0, 13e-12, 1e-8)
    assert detected_rate(0.0, p) == 0.0
    # operating point: R_0 * 0.99 + 1100 background
    assert 10200 * 0.99 + 1100 == pytest.approx(11198, abs=1)
    assert abs(11198 - 11400) / 11400 < 0.03
    # saturation limit
    p_sat = SaturationParams(10200.0, 1e-9, 0.0, 1.0, 1e-8)
    assert detected_rate(1e3, p_sat) == pytest.approx(10200.0)


def test_detected_rate_asymptotic_slope():
    p = SaturationParams(1000.0, 0.1, 2.0, 1e-8, 1e-8)
    hi = detected_rate(np.array([1e6, 2e6]), p)
    assert (hi[1] - hi[0]) / 1e6 == pytest.approx(2.0, rel=1e-6)


def test_emitter_defaults_and_dark_period():
    e = EmitterParams()
    assert e.tau_r * e.k21 == pytest.approx(1.0)
    assert dark_period(6e3) == pytest.approx(1.667e-4, rel=1e-3)
    assert abs(dark_period(6e3) - 170e-6) <= 5e-6
    assert e.dark_period == dark_period(e.k31)
    with pytest.raises(DomainError):
        EmitterParams(k21=0)
    with pytest.raises(DomainError):
        EmitterParams(qe=1.5)


def test_excitation_invariants():
    assert ExcitationConfig(200, 0.05, 13e-12, 15e3, 10).n_pulses == 150000
    with pytest.raises(DomainError):
        ExcitationConfig(200, 0.05, 13e-12, 15e3, 0)
    with pytest.raises(DomainError):
        ExcitationConfig(200, 0.05, 13e-12, 10.0, 0.01)
    with pytest.raises(DomainError):
        ExcitationConfig(-1, 0.05, 13e-12, 15e3, 10)


def test_triplet_branching():
    assert triplet_branching(EmitterParams()) == pytest.approx(9.999e-5, rel=1e-4)
    assert triplet_branching(EmitterParams(k23=0)) == 0
    assert triplet_branching(EmitterParams(k21=5e7, k23=5e7)) == 0.5


def test_shelving_occupancy():
    e = EmitterParams()
    assert shelving_occupancy(EmitterParams(k23=0), 15e3, 0.99) == 0
    value = shelving_occupancy(e, 15e3, 0.99)
    assert 1e-5 < value < 1e-3
    # independent two-state chain: solve the stationary distribution numerically
    p = 0.99 * triplet_branching(e)
    q = math.exp(-e.k31 / 15e3)
    # state seen by each arriving pulse: bright (0) or dark (1)
    P = np.array([[1 - p * q, p * q], [1 - q, q]])
    w, v = np.linalg.eig(P.T)
    pi = np.real(v[:, np.argmin(abs(w - 1))])
    pi /= pi.sum()
    assert value == pytest.approx(pi[1], rel=1e-9)
    # long dark gaps: nothing carried to the next pulse
    assert shelving_occupancy(e, 1e-3, 0.99) < 1e-30


def test_solve_saturation_energy():
    Es = solve_saturation_energy(200.0, 0.99, 13e-12, 1e-8)
    assert excited_population(200.0, Es, 13e-12, 1e-8) == pytest.approx(0.99, rel=1e-10)
    # zero energy cannot reach any positive rho
    assert math.isnan(solve_saturation_energy(0.0, 0.5, 13e-12, 1e-8))
