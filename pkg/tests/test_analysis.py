"""Observables: power averaging, displacement stats, Welch PSD, the
energy-balance audit, and trajectory CSV round-trips."""

import numpy as np
import pytest

import harvestsim as hs
from harvestsim.analysis import (TRAJECTORY_COLUMNS, TooShortError,
                                 WindowEmptyError)
from harvestsim.dynamics import ModelVariant, Trajectory, default_initial, integrate


def _flat_trajectory(n=1000, dt=1e-5, vn1=1.0, vn2=0.0):
    t = np.arange(n) * dt
    z = np.zeros(n)
    return Trajectory(variant=ModelVariant.NONLINEAR, t=t, x=z, v=z,
                      q1=z, q2=z, vn1=np.full(n, vn1), vn2=np.full(n, vn2),
                      accel=z, power=np.full(n, vn1 ** 2 / 1e6),
                      sample_interval=dt)


def test_average_power_ohms_law():
    # 1 V across 1 MOhm on port 1, port 2 quiet -> 1 uW
    loads = hs.LoadNetwork(resistance1=1e6, resistance2=1e6,
                           parasitic_cap=0.0)
    report = hs.average_power(_flat_trajectory(), loads)
    assert report.average_power == pytest.approx(1e-6, rel=1e-12)
    assert report.port1_power == pytest.approx(1e-6, rel=1e-12)
    assert report.port2_power == 0.0


def test_average_power_settle_discard():
    traj = _flat_trajectory(n=1000, dt=1e-5)
    loads = hs.LoadNetwork(resistance1=1e6, resistance2=1e6, parasitic_cap=0.0)
    report = hs.average_power(traj, loads, settle_discard=5e-3)
    assert report.settle_discard == 5e-3
    assert report.average_power == pytest.approx(1e-6, rel=1e-12)
    with pytest.raises(WindowEmptyError):
        hs.average_power(traj, loads, settle_discard=1.0)


def test_displacement_stats_contact_fraction():
    t = np.arange(10) * 1e-5
    x = np.array([0, 5e-6, 15e-6, -15e-6, 13e-6, 0, 14.2e-6, 1e-6, 0, 0.0])
    z = np.zeros(10)
    traj = Trajectory(variant=ModelVariant.NONLINEAR, t=t, x=x, v=z, q1=z,
                      q2=z, vn1=z, vn2=z, accel=z, power=z, sample_interval=1e-5)
    peak, contact = hs.displacement_stats(traj, 14e-6)
    assert peak == 15e-6
    assert contact == pytest.approx(0.3)


def test_phase_space_export():
    traj = _flat_trajectory(n=10)
    pts = hs.phase_space_export(traj)
    assert pts.shape == (10, 2)


def test_welch_psd_white_noise_level():
    # unit-variance white noise at rate fs has one-sided PSD 2/fs
    rng = np.random.Generator(np.random.PCG64(17))
    series = rng.standard_normal(200000)
    freqs, psd = hs.welch_psd(series, 1000.0)
    band = (freqs > 20.0) & (freqs < 480.0)
    assert np.mean(psd[band]) == pytest.approx(2.0 / 1000.0, rel=0.05)


def test_welch_psd_parseval():
    rng = np.random.Generator(np.random.PCG64(18))
    series = rng.standard_normal(100000)
    freqs, psd = hs.welch_psd(series, 1.0)
    assert np.trapezoid(psd, freqs) == pytest.approx(np.var(series), rel=0.05)


def test_welch_psd_sine_peak_power():
    fs = 10000.0
    t = np.arange(100000) / fs
    amp = 3.0
    series = amp * np.sin(2 * np.pi * 500.0 * t)
    freqs, psd = hs.welch_psd(series, fs)
    near = np.abs(freqs - 500.0) < 50.0
    assert np.trapezoid(psd[near], freqs[near]) == pytest.approx(
        amp ** 2 / 2.0, rel=0.02)


def test_welch_psd_zero_series():
    freqs, psd = hs.welch_psd(np.zeros(10000), 100.0)
    assert np.all(psd == 0.0)


def test_welch_psd_too_short():
    with pytest.raises(TooShortError):
        hs.welch_psd(np.zeros(100), 100.0)


def test_energy_audit_fixed_point(device, loads):
    traj = integrate(ModelVariant.NONLINEAR, device, loads, None,
                     default_initial(device), (0.0, 0.01))
    report = hs.energy_audit(traj, device, loads)
    assert report.relative_residual < 1e-6


def test_energy_audit_sine_drive(device, loads):
    sine = hs.SineSpec.from_g(1.0, 1190.0)
    traj = integrate(ModelVariant.NONLINEAR, device, loads, sine,
                     default_initial(device), (0.0, 0.437))
    report = hs.energy_audit(traj, device, loads)
    assert report.relative_residual < 1e-3
    assert report.dissipated > 0.0


def test_energy_audit_stopper_regime(device, loads):
    sine = hs.SineSpec.from_g(5.0, 1190.0)
    traj = integrate(ModelVariant.NONLINEAR, device, loads, sine,
                     default_initial(device), (0.0, 0.437))
    assert hs.energy_audit(traj, device, loads).relative_residual < 1e-3


def test_energy_audit_linear_variant(device, loads):
    sine = hs.SineSpec.from_g(1.0, 1190.0)
    traj = integrate(ModelVariant.LINEAR, device, loads, sine,
                     default_initial(device, ModelVariant.LINEAR), (0.0, 0.437))
    assert hs.energy_audit(traj, device, loads).relative_residual < 1e-3


def test_energy_audit_ringdown_identity(device, loads):
    # with V_e = 0 the mechanical energy loss equals the viscous integral
    import dataclasses
    unbiased = dataclasses.replace(
        device, electret=hs.ElectretBias(voltage=0.0, capacitance=5e-12))
    from harvestsim.dynamics import SimState
    init = SimState(0.0, 1e-6, 0.0, 0.0, 0.0)
    traj = integrate(ModelVariant.NONLINEAR, unbiased, loads, None, init,
                     (0.0, 0.05))
    report = hs.energy_audit(traj, unbiased, loads)
    assert report.relative_residual < 1e-3
    mech = unbiased.mechanical
    e0 = 0.5 * mech.spring_constant * 1e-12
    e1 = (0.5 * mech.spring_constant * traj.x[-1] ** 2
          + 0.5 * mech.mass * traj.v[-1] ** 2)
    assert report.dissipated == pytest.approx(e0 - e1, rel=1e-3)


def test_trajectory_roundtrip(tmp_path, device, loads):
    sine = hs.SineSpec.from_g(1.0, 1190.0)
    traj = integrate(ModelVariant.NONLINEAR, device, loads, sine,
                     default_initial(device), (0.0, 0.02))
    path = tmp_path / "traj.csv"
    hs.write_trajectory(traj, path, comment="unit test")
    text = path.read_text()
    assert text.startswith("# unit test\n" + TRAJECTORY_COLUMNS)
    back = hs.read_trajectory(path)
    np.testing.assert_array_equal(back.x, traj.x)
    np.testing.assert_array_equal(back.q1, traj.q1)
    np.testing.assert_array_equal(back.power, traj.power)
