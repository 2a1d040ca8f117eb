"""Coupled ODE behavior: fixed point, reference rates vs the compiled
core, ring-down against the closed-form oscillator, symmetry, determinism,
and tolerance convergence."""

import dataclasses

import numpy as np
import pytest

import harvestsim as hs
from harvestsim.dynamics import (IntegratorConfig, ModelVariant, SimState,
                                 default_initial, electrical_rates, integrate,
                                 mechanical_rate)
from harvestsim import _core


@pytest.fixture(scope="module")
def unbiased(device):
    return dataclasses.replace(
        device, electret=hs.ElectretBias(voltage=0.0, capacitance=5e-12))


def test_default_initial_is_operating_point(device):
    init = default_initial(device)
    assert init.charge1 == pytest.approx(-2.6343e-11, rel=1e-4)
    assert init.charge1 == init.charge2
    assert init.displacement == 0.0 and init.velocity == 0.0


def test_default_initial_linear_offsets_are_zero(device):
    init = default_initial(device, ModelVariant.LINEAR)
    assert init.charge1 == 0.0 and init.charge2 == 0.0


def test_electrical_rates_vanish_at_operating_point(device, loads):
    init = default_initial(device)
    dq1, dq2 = electrical_rates(init, ModelVariant.NONLINEAR, device, loads)
    # node voltages at the operating point vanish to rounding (~1e-16 V),
    # leaving only ~1e-23 C/s of numerical leakage
    assert abs(dq1) < 1e-21 and abs(dq2) < 1e-21


def test_electrical_rates_without_parasitic(device):
    # C_p = 0 reduces the node balance to dq/dt = -V_n / R
    bare = hs.LoadNetwork(resistance1=28e6, resistance2=14e6, parasitic_cap=0.0)
    state = SimState(0.0, 2e-6, 0.01, -2e-11, -3e-11)
    dq1, dq2 = electrical_rates(state, ModelVariant.NONLINEAR, device, bare)
    v1, v2 = hs.port_voltages(2e-6, -2e-11, -3e-11, device)
    assert dq1 == pytest.approx(-v1 / 28e6, rel=1e-12)
    assert dq2 == pytest.approx(-v2 / 14e6, rel=1e-12)


def test_electrical_rates_mirror(device, loads):
    a = SimState(0.0, 3e-6, 0.02, -1e-11, -4e-11)
    b = SimState(0.0, -3e-6, -0.02, -4e-11, -1e-11)
    da = electrical_rates(a, ModelVariant.NONLINEAR, device, loads)
    db = electrical_rates(b, ModelVariant.NONLINEAR, device, loads)
    assert da[0] == pytest.approx(db[1], rel=1e-12)
    assert da[1] == pytest.approx(db[0], rel=1e-12)


def test_mechanical_rate_rest(device):
    init = default_initial(device)
    assert mechanical_rate(init, ModelVariant.NONLINEAR, device, 0.0) == (
        pytest.approx(0.0, abs=1e-9))


def test_mechanical_rate_free_mass(device):
    state = SimState(0.0, 0.0, 0.0, 0.0, 0.0)
    assert mechanical_rate(state, ModelVariant.NONLINEAR, device, 9.81) == (
        pytest.approx(9.81, rel=1e-12))


def test_mechanical_rate_with_stopper_engaged(device):
    # at 14.5 um the stopper pushes back with 0.163 N
    state = SimState(0.0, 14.5e-6, 0.0, 0.0, 0.0)
    k = device.mechanical.spring_constant
    m = device.mechanical.mass
    expected = (-k * 14.5e-6 - 0.163) / m
    assert mechanical_rate(state, ModelVariant.NONLINEAR, device, 0.0) == (
        pytest.approx(expected, rel=1e-9))


def test_core_rhs_matches_reference(device, loads):
    # the compiled right-hand side must agree with the pure-Python one
    for variant in (ModelVariant.NONLINEAR, ModelVariant.LINEAR):
        p = hs.dynamics.pack_params(variant, device, loads)
        for state in (SimState(0.0, 1e-6, 0.01, -2.5e-11, -2.7e-11),
                      SimState(0.0, -13e-6, -0.05, -1e-11, -5e-11),
                      SimState(0.0, 14.3e-6, 0.08, -3e-11, -1e-12)):
            out = np.empty(4)
            _core.rhs(0.0, state.as_array(), p, _core.EX_NONE,
                      np.zeros(3), np.zeros(2), out)
            dq1, dq2 = electrical_rates(state, variant, device, loads)
            dv = mechanical_rate(state, variant, device, 0.0)
            assert out[0] == pytest.approx(state.velocity, rel=1e-14)
            assert out[1] == pytest.approx(dv, rel=1e-10)
            assert out[2] == pytest.approx(dq1, rel=1e-10)
            assert out[3] == pytest.approx(dq2, rel=1e-10)


def test_fixed_point_stays_put(device, loads):
    traj = integrate(ModelVariant.NONLINEAR, device, loads, None,
                     default_initial(device), (0.0, 0.01))
    assert np.max(np.abs(traj.x)) < 1e-12
    assert np.max(np.abs(traj.v)) < 1e-9
    q0 = default_initial(device).charge1
    assert np.max(np.abs(traj.q1 - q0)) < 1e-17


def test_ringdown_matches_analytic(unbiased, loads):
    # V_e = 0 and zero charge decouple the electronics; the mass is the
    # textbook damped oscillator
    init = SimState(0.0, 1e-6, 0.0, 0.0, 0.0)
    traj = integrate(ModelVariant.NONLINEAR, unbiased, loads, None, init,
                     (0.0, 0.05))
    m = unbiased.mechanical.mass
    k = unbiased.mechanical.spring_constant
    b = unbiased.mechanical.damping_constant
    gamma = b / (2.0 * m)
    wd = np.sqrt(k / m - gamma ** 2)
    t = traj.t
    xa = np.exp(-gamma * t) * (1e-6 * np.cos(wd * t)
                               + gamma * 1e-6 / wd * np.sin(wd * t))
    va = np.exp(-gamma * t) * (-1e-6 * (gamma ** 2 / wd + wd) * np.sin(wd * t))
    assert np.max(np.abs(traj.x - xa)) / 1e-6 < 1e-4
    assert np.max(np.abs(traj.v - va)) / (1e-6 * np.sqrt(k / m)) < 1e-4


def test_ringdown_time_constant(unbiased, loads):
    # envelope decays with 2m/b ~ 13.7 ms; the slowly varying amplitude
    # sqrt(x^2 + (v/w)^2) tracks it
    init = SimState(0.0, 1e-6, 0.0, 0.0, 0.0)
    m = unbiased.mechanical.mass
    k = unbiased.mechanical.spring_constant
    tau = 2.0 * m / unbiased.mechanical.damping_constant
    traj = integrate(ModelVariant.NONLINEAR, unbiased, loads, None, init,
                     (0.0, tau))
    w = np.sqrt(k / m)
    amp = np.sqrt(traj.x[-1] ** 2 + (traj.v[-1] / w) ** 2)
    assert amp == pytest.approx(1e-6 * np.exp(-traj.t[-1] / tau), rel=0.01)


def test_mirror_symmetry_of_trajectories(device, loads):
    # negating the excitation mirrors the solution: (x, v, q1, q2) ->
    # (-x, -v, q2, q1) for symmetric loads
    sine = hs.SineSpec.from_g(1.0, 1190.0)
    mirrored = dataclasses.replace(sine, amplitude=-sine.amplitude)
    a = integrate(ModelVariant.NONLINEAR, device, loads, sine,
                  default_initial(device), (0.0, 0.2))
    b = integrate(ModelVariant.NONLINEAR, device, loads, mirrored,
                  default_initial(device), (0.0, 0.2))
    np.testing.assert_allclose(b.x, -a.x, rtol=0, atol=1e-12)
    np.testing.assert_allclose(b.v, -a.v, rtol=0, atol=1e-8)
    np.testing.assert_allclose(b.q1, a.q2, rtol=0, atol=1e-18)
    np.testing.assert_allclose(b.q2, a.q1, rtol=0, atol=1e-18)


def test_rerun_is_bit_identical(device, loads):
    sine = hs.SineSpec.from_g(2.0, 1190.0)
    a = integrate(ModelVariant.NONLINEAR, device, loads, sine,
                  default_initial(device), (0.0, 0.3))
    b = integrate(ModelVariant.NONLINEAR, device, loads, sine,
                  default_initial(device), (0.0, 0.3))
    assert np.array_equal(a.x, b.x)
    assert np.array_equal(a.q1, b.q1)
    assert np.array_equal(a.power, b.power)


def test_tolerance_convergence(device, loads):
    sine = hs.SineSpec.from_g(1.0, 1190.0)
    base = IntegratorConfig()
    tight = IntegratorConfig(rel_tol=base.rel_tol / 2.0,
                             abs_tol=tuple(a / 2.0 for a in base.abs_tol))
    pa = hs.average_power(
        integrate(ModelVariant.NONLINEAR, device, loads, sine,
                  default_initial(device), (0.0, 0.437), base),
        loads, 0.137).average_power
    pb = hs.average_power(
        integrate(ModelVariant.NONLINEAR, device, loads, sine,
                  default_initial(device), (0.0, 0.437), tight),
        loads, 0.137).average_power
    assert abs(pb - pa) / pa < 0.005


def test_unbiased_device_produces_no_power(unbiased, loads):
    sine = hs.SineSpec.from_g(1.0, 1190.0)
    traj = integrate(ModelVariant.NONLINEAR, unbiased, loads, sine,
                     default_initial(unbiased), (0.0, 0.437))
    power = hs.average_power(traj, loads, 0.137).average_power
    assert power < 1e-20


def test_stopper_limits_displacement(device, loads):
    sine = hs.SineSpec.from_g(10.0, 1190.0)
    traj = integrate(ModelVariant.NONLINEAR, device, loads, sine,
                     default_initial(device), (0.0, 0.437))
    peak, contact = hs.displacement_stats(
        traj, device.stoppers.engage_displacement, 0.137)
    assert contact > 0.0
    assert peak < 14.5e-6  # never reaches the capacitance clamp
    assert np.all(np.isfinite(traj.x))


def test_excitation_must_cover_span(device, loads):
    sig = hs.SampledSignal(start_time=0.0, sample_rate=1e4,
                           samples=np.zeros(11))
    with pytest.raises(ValueError):
        integrate(ModelVariant.NONLINEAR, device, loads, sig,
                  default_initial(device), (0.0, 1.0))


def test_sampled_excitation_matches_sine(device, loads):
    # a densely sampled sine drives the system like the analytic sine
    sine = hs.SineSpec.from_g(0.5, 1190.0)
    rate = 2e6
    n = int(0.2 * rate) + 1
    t = np.arange(n) / rate
    sig = hs.SampledSignal(start_time=0.0, sample_rate=rate,
                           samples=hs.sine_eval(sine, t))
    a = integrate(ModelVariant.NONLINEAR, device, loads, sine,
                  default_initial(device), (0.0, 0.2))
    b = integrate(ModelVariant.NONLINEAR, device, loads, sig,
                  default_initial(device), (0.0, 0.2))
    assert np.max(np.abs(a.x - b.x)) < 1e-3 * np.max(np.abs(a.x))


def test_invalid_time_span(device, loads):
    with pytest.raises(ValueError):
        integrate(ModelVariant.NONLINEAR, device, loads, None,
                  default_initial(device), (0.1, 0.1))
