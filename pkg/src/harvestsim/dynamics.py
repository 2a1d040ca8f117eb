"""Coupled electromechanical ODE system and its adaptive integrator.

The five quantities of interest are time, proof-mass displacement and
velocity, and the two capacitor charges. The nonlinear variant evolves
absolute charges with stoppers and capacitance clamps active; the linear
variant evolves charge offsets from the DC operating point with neither.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import _core
from .device import (DeviceParams, LinearModel, LoadNetwork,
                     dc_equilibrium_charge, inv_cap_gradient, linearize,
                     nominal_capacitance, port_voltages, stopper_force,
                     transducer_force)
from .excitation import (ExcitationSpec, NoiseSpec, SampledSignal, SineSpec,
                         noise_generate, sine_eval)


class NonFiniteError(RuntimeError):
    """State diverged; carries the last time that was still finite."""

    def __init__(self, t_reached: float):
        self.t_reached = t_reached
        super().__init__(f"state became non-finite near t={t_reached:.6g} s")


class StepUnderflowError(RuntimeError):
    def __init__(self, t_reached: float):
        self.t_reached = t_reached
        super().__init__(f"step size underflow near t={t_reached:.6g} s")


class ModelVariant(enum.Enum):
    LINEAR = "linear"
    NONLINEAR = "nonlinear"


@dataclass(frozen=True)
class SimState:
    time: float
    displacement: float
    velocity: float
    charge1: float
    charge2: float

    def as_array(self) -> np.ndarray:
        return np.array([self.displacement, self.velocity,
                         self.charge1, self.charge2])


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-6
    abs_tol: tuple[float, float, float, float] = (1e-12, 1e-8, 1e-18, 1e-18)
    max_step: float = 5e-5
    event_tol: float = 1e-9
    sample_interval: float = 1e-5

    def __post_init__(self):
        if self.rel_tol <= 0 or any(a <= 0 for a in self.abs_tol):
            raise ValueError("tolerances must be > 0")
        if self.max_step <= 0 or self.event_tol <= 0 or self.sample_interval <= 0:
            raise ValueError("max_step, event_tol, sample_interval must be > 0")


@dataclass(frozen=True)
class Trajectory:
    """Uniformly sampled solution with derived port voltages and power.

    For the linear variant the charge columns hold offsets from the DC
    operating point.
    """

    variant: ModelVariant
    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    q1: np.ndarray
    q2: np.ndarray
    vn1: np.ndarray
    vn2: np.ndarray
    accel: np.ndarray
    power: np.ndarray
    sample_interval: float

    def __len__(self) -> int:
        return len(self.t)


def default_initial(params: DeviceParams,
                    variant: ModelVariant = ModelVariant.NONLINEAR) -> SimState:
    """Rest at the DC operating point: zero displacement and velocity,
    equilibrium charge on both capacitors (zero offsets for the linear
    variant)."""
    if variant is ModelVariant.LINEAR:
        return SimState(0.0, 0.0, 0.0, 0.0, 0.0)
    q0 = dc_equilibrium_charge(params)
    return SimState(0.0, 0.0, 0.0, q0, q0)


def pack_params(variant: ModelVariant, params: DeviceParams,
                loads: LoadNetwork) -> np.ndarray:
    """Flatten the parameter records into the vector the compiled core
    consumes."""
    lin = linearize(params)
    p = np.zeros(_core.NPARAMS)
    p[_core.P_MASS] = params.mechanical.mass
    p[_core.P_SPRING] = params.mechanical.spring_constant
    p[_core.P_DAMPING] = params.mechanical.damping_constant
    p[_core.P_VE] = params.electret.voltage
    p[_core.P_CE] = params.electret.capacitance
    p[_core.P_CP] = loads.parasitic_cap
    p[_core.P_R1] = loads.resistance1
    p[_core.P_R2] = loads.resistance2
    p[_core.P_XS] = params.stoppers.engage_displacement
    p[_core.P_KS] = params.stoppers.stiffness
    p[_core.P_XC] = params.clamp.clamp_displacement
    p[_core.P_X0] = params.geometry.nominal_overlap
    p[_core.P_CAP_SLOPE] = params.geometry.cap_per_meter
    p[_core.P_CMAX] = params.clamp.cap_max
    p[_core.P_CMIN] = params.clamp.cap_min
    p[_core.P_VARIANT] = 0.0 if variant is ModelVariant.NONLINEAR else 1.0
    p[_core.P_C0] = lin.nominal_cap
    p[_core.P_ALPHA1] = lin.coupling1
    p[_core.P_KQ] = lin.stiffness_correction
    return p


def _encode_excitation(excitation: ExcitationSpec | None,
                       t_end: float) -> tuple[int, np.ndarray, np.ndarray]:
    if excitation is None:
        return _core.EX_NONE, np.zeros(3), np.zeros(2)
    if isinstance(excitation, SineSpec):
        par = np.array([excitation.amplitude, excitation.frequency,
                        excitation.phase])
        return _core.EX_SINE, par, np.zeros(2)
    if isinstance(excitation, NoiseSpec):
        excitation = noise_generate(excitation)
    if isinstance(excitation, SampledSignal):
        if excitation.end_time < t_end - 1e-9:
            raise ValueError(
                f"excitation ends at {excitation.end_time:.6g} s, before "
                f"integration end {t_end:.6g} s")
        par = np.array([excitation.start_time, 1.0 / excitation.sample_rate, 0.0])
        return _core.EX_SAMPLED, par, np.ascontiguousarray(excitation.samples,
                                                           dtype=float)
    raise TypeError(f"unsupported excitation {type(excitation).__name__}")


def accel_series(excitation: ExcitationSpec | None, t: np.ndarray) -> np.ndarray:
    """Excitation acceleration evaluated on a time grid [m/s^2]."""
    kind, par, samples = _encode_excitation(excitation, float(t[-1]) if len(t) else 0.0)
    out = np.empty(len(t))
    for i, ti in enumerate(t):
        out[i] = _core.accel_at(ti, kind, par, samples)
    return out


def port_voltage_series(variant: ModelVariant, params: DeviceParams,
                        x: np.ndarray, q1: np.ndarray, q2: np.ndarray,
                        ) -> tuple[np.ndarray, np.ndarray]:
    """Output node voltages along a sampled trajectory."""
    if variant is ModelVariant.NONLINEAR:
        return port_voltages(x, q1, q2, params)
    lin = linearize(params)
    common = (q1 + q2) / params.electret.capacitance
    vn1 = lin.coupling1 * x + common + q1 / lin.nominal_cap
    vn2 = lin.coupling2 * x + common + q2 / lin.nominal_cap
    return vn1, vn2


def electrical_rates(state: SimState, variant: ModelVariant,
                     params: DeviceParams, loads: LoadNetwork,
                     ) -> tuple[float, float]:
    """Charge flow rates from the current balance at both output nodes.

    The parasitic capacitor at each node turns the balance into a 2x2
    linear system in (dq1/dt, dq2/dt), solved exactly. Reference
    implementation; the compiled core mirrors it.
    """
    x, v, q1, q2 = state.displacement, state.velocity, state.charge1, state.charge2
    ce = params.electret.capacitance
    cp = loads.parasitic_cap
    if variant is ModelVariant.NONLINEAR:
        from .device import capacitance_pair
        c1, c2 = capacitance_pair(x, params.geometry, params.clamp)
        u1, u2 = inv_cap_gradient(x, params.geometry, params.clamp)
        vn1, vn2 = port_voltages(x, q1, q2, params)
        g1 = cp * q1 * u1 * v
        g2 = cp * q2 * u2 * v
    else:
        lin = linearize(params)
        c1 = c2 = lin.nominal_cap
        vn1, vn2 = port_voltage_series(variant, params,
                                       np.asarray(x), np.asarray(q1),
                                       np.asarray(q2))
        vn1, vn2 = float(vn1), float(vn2)
        g1 = cp * lin.coupling1 * v
        g2 = cp * lin.coupling2 * v
    a11 = 1.0 + cp * (1.0 / ce + 1.0 / c1)
    a22 = 1.0 + cp * (1.0 / ce + 1.0 / c2)
    a12 = cp / ce
    b1 = -(vn1 / loads.resistance1 + g1)
    b2 = -(vn2 / loads.resistance2 + g2)
    det = a11 * a22 - a12 * a12
    return (a22 * b1 - a12 * b2) / det, (a11 * b2 - a12 * b1) / det


def mechanical_rate(state: SimState, variant: ModelVariant,
                    params: DeviceParams, accel: float) -> float:
    """Proof-mass acceleration from Newton's law in the device frame."""
    x, v = state.displacement, state.velocity
    b = params.mechanical.damping_constant
    m = params.mechanical.mass
    if variant is ModelVariant.NONLINEAR:
        ft = transducer_force(x, state.charge1, state.charge2, params)
        # stopper_force returns the force acting on the mass, so it enters
        # Newton's law with a plus sign (restoring)
        fs = stopper_force(x, params.stoppers)
    else:
        lin = linearize(params)
        ft = ((params.mechanical.spring_constant + lin.stiffness_correction) * x
              + lin.coupling1 * state.charge1 + lin.coupling2 * state.charge2)
        fs = 0.0
    return (-ft + fs - b * v) / m + accel


def integrate(variant: ModelVariant, params: DeviceParams, loads: LoadNetwork,
              excitation: ExcitationSpec | None, initial: SimState,
              t_span: tuple[float, float],
              config: IntegratorConfig = IntegratorConfig()) -> Trajectory:
    """Integrate the coupled system over t_span with adaptive
    Dormand-Prince 5(4) stepping.

    Crossings of the stopper and clamp displacements are localized to
    within config.event_tol and steps are cut there, so the derivative
    kinks never sit inside an accepted step. Output is sampled on the
    uniform config.sample_interval grid by cubic Hermite interpolation.
    """
    t0, t1 = t_span
    if not t1 > t0:
        raise ValueError("t_span must have positive length")
    y0 = initial.as_array()
    if not np.all(np.isfinite(y0)):
        raise ValueError("initial state must be finite")

    p = pack_params(variant, params, loads)
    kind, ex_par, samples = _encode_excitation(excitation, t1)

    n = int(np.floor((t1 - t0) / config.sample_interval + 1e-9)) + 1
    ts = t0 + np.arange(n) * config.sample_interval
    ys = np.empty((n, 4))

    status, t_reached, _, _ = _core.integrate_core(
        y0, t0, t1, p, kind, ex_par, samples,
        config.rel_tol, np.asarray(config.abs_tol, dtype=float),
        config.max_step, config.event_tol, ts, ys)
    if status == _core.STATUS_NONFINITE:
        raise NonFiniteError(t_reached)
    if status == _core.STATUS_UNDERFLOW:
        raise StepUnderflowError(t_reached)

    x, v, q1, q2 = ys[:, 0], ys[:, 1], ys[:, 2], ys[:, 3]
    vn1, vn2 = port_voltage_series(variant, params, x, q1, q2)
    acc = accel_series(excitation, ts)
    power = vn1 ** 2 / loads.resistance1 + vn2 ** 2 / loads.resistance2
    return Trajectory(variant=variant, t=ts, x=x, v=v, q1=q1, q2=q2,
                      vn1=vn1, vn2=vn2, accel=acc, power=power,
                      sample_interval=config.sample_interval)
