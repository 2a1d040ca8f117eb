"""Observables derived from trajectories: average output power,
displacement statistics, Welch PSD estimates, phase-space series, the
energy-balance audit, and trajectory CSV I/O."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import welch

from .device import (DeviceParams, LoadNetwork, capacitance_pair, linearize)
from .dynamics import ModelVariant, Trajectory


class WindowEmptyError(ValueError):
    pass


class TooShortError(ValueError):
    pass


TRAJECTORY_COLUMNS = "t_s,x_m,v_mps,q1_C,q2_C,vn1_V,vn2_V,a_mps2,p_W"


@dataclass(frozen=True)
class PowerReport:
    average_power: float
    port1_power: float
    port2_power: float
    mean_square_displacement: float
    settle_discard: float
    observation_window: float


@dataclass(frozen=True)
class WelchConfig:
    segment_length: int = 4096
    overlap_fraction: float = 0.5
    window_shape: str = "hann"

    def __post_init__(self):
        if self.segment_length < 64:
            raise ValueError("segment_length must be >= 64")
        if not 0.0 <= self.overlap_fraction < 1.0:
            raise ValueError("overlap_fraction must be in [0, 1)")


@dataclass(frozen=True)
class EnergyReport:
    input_energy: float
    bias_source_energy: float
    stored_delta: float
    dissipated: float
    residual: float
    relative_residual: float


def _steady_mask(traj: Trajectory, settle_discard: float) -> np.ndarray:
    return traj.t >= traj.t[0] + settle_discard


def average_power(traj: Trajectory, loads: LoadNetwork,
                  settle_discard: float = 0.0) -> PowerReport:
    """Time-averaged load power and mean-square displacement after the
    settle window is discarded."""
    mask = _steady_mask(traj, settle_discard)
    if not np.any(mask):
        raise WindowEmptyError(
            f"settle discard {settle_discard} s leaves no samples")
    p1 = float(np.mean(traj.vn1[mask] ** 2)) / loads.resistance1
    p2 = float(np.mean(traj.vn2[mask] ** 2)) / loads.resistance2
    msd = float(np.mean(traj.x[mask] ** 2))
    window = float(traj.t[-1] - traj.t[mask][0])
    return PowerReport(average_power=p1 + p2, port1_power=p1, port2_power=p2,
                       mean_square_displacement=msd,
                       settle_discard=settle_discard,
                       observation_window=window)


def displacement_stats(traj: Trajectory, engage_displacement: float,
                       settle_discard: float = 0.0) -> tuple[float, float]:
    """(peak |x|, fraction of samples in stopper contact) after settling."""
    mask = _steady_mask(traj, settle_discard)
    if not np.any(mask):
        raise WindowEmptyError(
            f"settle discard {settle_discard} s leaves no samples")
    x = traj.x[mask]
    peak = float(np.max(np.abs(x)))
    contact = float(np.mean(np.abs(x) > engage_displacement))
    return peak, contact


def phase_space_export(traj: Trajectory) -> np.ndarray:
    """Ordered (x, v) pairs, ready for plotting."""
    if len(traj) == 0:
        raise WindowEmptyError("empty trajectory")
    return np.column_stack([traj.x, traj.v])


def welch_psd(series: np.ndarray, rate: float,
              config: WelchConfig = WelchConfig(),
              ) -> tuple[np.ndarray, np.ndarray]:
    """One-sided Welch PSD estimate normalized so its integral over
    frequency recovers the series variance (up to windowing bias)."""
    series = np.asarray(series, dtype=float)
    if len(series) < 2 * config.segment_length:
        raise TooShortError(
            f"series of {len(series)} samples, need >= {2 * config.segment_length}")
    noverlap = int(config.segment_length * config.overlap_fraction)
    freqs, psd = welch(series, fs=rate, window=config.window_shape,
                       nperseg=config.segment_length, noverlap=noverlap,
                       detrend=False, scaling="density")
    return freqs, psd


def stored_energy(traj: Trajectory, params: DeviceParams,
                  loads: LoadNetwork) -> np.ndarray:
    """Instantaneous stored energy along the trajectory: kinetic, spring,
    engaged-stopper, capacitor, electret, and parasitic terms."""
    mech = params.mechanical
    x, v, q1, q2 = traj.x, traj.v, traj.q1, traj.q2
    kinetic = 0.5 * mech.mass * v ** 2
    spring = 0.5 * mech.spring_constant * x ** 2
    xs = params.stoppers.engage_displacement
    pen = np.maximum(np.abs(x) - xs, 0.0)
    stop = 0.5 * params.stoppers.stiffness * pen ** 2
    ce = params.electret.capacitance
    parasitic = 0.5 * loads.parasitic_cap * (traj.vn1 ** 2 + traj.vn2 ** 2)
    if traj.variant is ModelVariant.NONLINEAR:
        c1, c2 = capacitance_pair(x, params.geometry, params.clamp)
        electric = (q1 ** 2 / (2.0 * c1) + q2 ** 2 / (2.0 * c2)
                    + (q1 + q2) ** 2 / (2.0 * ce))
        coupling = 0.0
    else:
        lin = linearize(params)
        c0 = lin.nominal_cap
        electric = ((q1 ** 2 + q2 ** 2) / (2.0 * c0)
                    + (q1 + q2) ** 2 / (2.0 * ce))
        coupling = lin.coupling1 * x * q1 + lin.coupling2 * x * q2
        stop = np.zeros_like(stop)
    return kinetic + spring + stop + electric + coupling + parasitic


def energy_audit(traj: Trajectory, params: DeviceParams,
                 loads: LoadNetwork) -> EnergyReport:
    """Balance the excitation work and electret source energy against the
    change in stored energy plus viscous and resistive dissipation.

    The electret source term enters with a minus sign: charge pushed onto
    the capacitors through the bias branch extracts energy from the
    source when the net charge decreases.
    """
    mech = params.mechanical
    t, v = traj.t, traj.v
    work_in = float(np.trapezoid(mech.mass * traj.accel * v, t))
    if traj.variant is ModelVariant.NONLINEAR:
        qsum = traj.q1 + traj.q2
        source = -params.electret.voltage * float(qsum[-1] - qsum[0])
    else:
        source = 0.0
    energy = stored_energy(traj, params, loads)
    stored_delta = float(energy[-1] - energy[0])
    dissipated = float(np.trapezoid(
        mech.damping_constant * v ** 2
        + traj.vn1 ** 2 / loads.resistance1
        + traj.vn2 ** 2 / loads.resistance2, t))
    residual = work_in + source - stored_delta - dissipated
    gross = max(float(np.trapezoid(np.abs(mech.mass * traj.accel * v), t))
                + abs(source),
                dissipated + abs(stored_delta),
                float(energy[0]),
                1e-30)
    return EnergyReport(input_energy=work_in, bias_source_energy=source,
                        stored_delta=stored_delta, dissipated=dissipated,
                        residual=residual,
                        relative_residual=abs(residual) / gross)


def write_trajectory(traj: Trajectory, path, comment: str | None = None) -> None:
    """Write the trajectory CSV with full round-trip precision."""
    with open(path, "w") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        fh.write(TRAJECTORY_COLUMNS + "\n")
        cols = (traj.t, traj.x, traj.v, traj.q1, traj.q2,
                traj.vn1, traj.vn2, traj.accel, traj.power)
        for row in zip(*cols):
            fh.write(",".join(f"{val:.17g}" for val in row) + "\n")


def read_trajectory(path, variant: ModelVariant = ModelVariant.NONLINEAR,
                    ) -> Trajectory:
    """Read a trajectory CSV back into arrays (comment lines skipped)."""
    import io
    with open(path) as fh:
        body = "".join(line for line in fh if not line.startswith("#"))
    data = np.genfromtxt(io.StringIO(body), delimiter=",", names=True)
    if data.size == 0:
        raise WindowEmptyError(f"{path} holds no samples")
    t = np.atleast_1d(data["t_s"])
    dt = float(t[1] - t[0]) if len(t) > 1 else 0.0
    return Trajectory(variant=variant, t=t,
                      x=np.atleast_1d(data["x_m"]),
                      v=np.atleast_1d(data["v_mps"]),
                      q1=np.atleast_1d(data["q1_C"]),
                      q2=np.atleast_1d(data["q2_C"]),
                      vn1=np.atleast_1d(data["vn1_V"]),
                      vn2=np.atleast_1d(data["vn2_V"]),
                      accel=np.atleast_1d(data["a_mps2"]),
                      power=np.atleast_1d(data["p_W"]),
                      sample_interval=dt)
