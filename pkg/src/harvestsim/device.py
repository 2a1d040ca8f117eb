"""Lumped-element physics of the overlap-varying electrostatic harvester.

All quantities are SI. Parameter records are frozen dataclasses; every
operation here is a pure function of them, so everything is safe to share
across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

VACUUM_PERMITTIVITY = 8.854e-12  # F/m
STANDARD_GRAVITY = 9.81  # m/s^2, used for acceleration levels quoted in g


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ValueError(msg)


@dataclass(frozen=True)
class DeviceGeometry:
    """Comb-drive geometry of the two variable capacitors.

    ``finger_width`` is carried for completeness but does not enter any
    capacitance or force expression.
    """

    finger_length: float
    finger_width: float
    finger_thickness: float
    gap: float
    finger_pairs: int
    nominal_overlap: float
    permittivity: float = VACUUM_PERMITTIVITY

    def __post_init__(self):
        _require(self.finger_length > 0, "finger_length must be > 0")
        _require(self.finger_width > 0, "finger_width must be > 0")
        _require(self.finger_thickness > 0, "finger_thickness must be > 0")
        _require(self.gap > 0, "gap must be > 0")
        _require(self.finger_pairs >= 1, "finger_pairs must be >= 1")
        _require(self.nominal_overlap > 0, "nominal_overlap must be > 0")
        _require(self.permittivity > 0, "permittivity must be > 0")

    @property
    def cap_per_meter(self) -> float:
        """Slope of the unclamped capacitance law, dC/d(overlap) [F/m]."""
        return (2.0 * self.finger_pairs * self.permittivity
                * self.finger_thickness / self.gap)


@dataclass(frozen=True)
class MechanicalParams:
    mass: float
    spring_constant: float
    damping_constant: float

    def __post_init__(self):
        _require(self.mass > 0, "mass must be > 0")
        _require(self.spring_constant > 0, "spring_constant must be > 0")
        _require(self.damping_constant >= 0, "damping_constant must be >= 0")

    @property
    def natural_frequency(self) -> float:
        """Undamped resonance frequency [Hz]."""
        return np.sqrt(self.spring_constant / self.mass) / (2.0 * np.pi)

    @property
    def quality_factor(self) -> float:
        return np.sqrt(self.spring_constant * self.mass) / self.damping_constant


@dataclass(frozen=True)
class DampingGeometry:
    """Inputs of the Couette-flow damping estimate."""

    mass_area: float
    cap_gap: float
    viscosity: float

    def __post_init__(self):
        _require(self.mass_area > 0, "mass_area must be > 0")
        _require(self.cap_gap > 0, "cap_gap must be > 0")
        _require(self.viscosity > 0, "viscosity must be > 0")


@dataclass(frozen=True)
class ElectretBias:
    voltage: float
    capacitance: float

    def __post_init__(self):
        _require(self.capacitance > 0, "electret capacitance must be > 0")


@dataclass(frozen=True)
class StopperParams:
    engage_displacement: float
    stiffness: float

    def __post_init__(self):
        _require(self.engage_displacement > 0, "engage_displacement must be > 0")
        _require(self.stiffness > 0, "stopper stiffness must be > 0")


@dataclass(frozen=True)
class CapClamp:
    """Saturation of the capacitance law to [cap_min, cap_max] beyond
    +/- clamp_displacement, keeping the law continuous."""

    clamp_displacement: float
    cap_max: float
    cap_min: float

    def __post_init__(self):
        _require(self.clamp_displacement > 0, "clamp_displacement must be > 0")
        _require(self.cap_min > 0, "cap_min must be > 0")
        _require(self.cap_max > self.cap_min, "cap_max must exceed cap_min")

    @classmethod
    def from_continuity(cls, geometry: DeviceGeometry,
                        clamp_displacement: float) -> "CapClamp":
        """Fix cap_max/cap_min so the clamped law is continuous at the
        clamp displacement."""
        s = geometry.cap_per_meter
        x0 = geometry.nominal_overlap
        xc = clamp_displacement
        _require(xc < x0, "clamp_displacement must be below nominal_overlap")
        return cls(clamp_displacement=xc,
                   cap_max=s * (x0 + xc),
                   cap_min=s * (x0 - xc))


@dataclass(frozen=True)
class LoadNetwork:
    """Resistive loads and the parasitic capacitance at each output node."""

    resistance1: float
    resistance2: float
    parasitic_cap: float

    def __post_init__(self):
        _require(self.resistance1 > 0, "resistance1 must be > 0")
        _require(self.resistance2 > 0, "resistance2 must be > 0")
        _require(self.parasitic_cap >= 0, "parasitic_cap must be >= 0")


@dataclass(frozen=True)
class DeviceParams:
    """Complete harvester description: geometry plus mechanical,
    electret, stopper and clamp parameters."""

    geometry: DeviceGeometry
    mechanical: MechanicalParams
    electret: ElectretBias
    stoppers: StopperParams
    clamp: CapClamp

    def __post_init__(self):
        _require(self.stoppers.engage_displacement < self.clamp.clamp_displacement,
                 "stoppers must engage before the capacitance clamp")
        _require(self.clamp.clamp_displacement < self.geometry.nominal_overlap,
                 "capacitance clamp must engage before overlap vanishes")


@dataclass(frozen=True)
class LinearModel:
    """Small-signal model about the biased rest position.

    Charges in this model are offsets from the equilibrium charge on
    each variable capacitor. stiffness_correction is the first-order
    electrostatic spring term at fixed charge; it keeps the small-signal
    resonance of this model aligned with the full model's.
    """

    coupling1: float
    coupling2: float
    nominal_cap: float
    equilibrium_charge: float
    stiffness_correction: float
    mechanical: MechanicalParams
    electret: ElectretBias

    def __post_init__(self):
        _require(np.isclose(self.coupling2, -self.coupling1, rtol=1e-12, atol=0.0),
                 "couplings must be equal and opposite")


def default_device() -> DeviceParams:
    """Reference harvester: 524 finger pairs in a 60 um SOI device layer,
    5.78 mg proof mass, 20 V electret bias, stoppers at 14 um and
    capacitance clamp at 14.5 um."""
    geometry = DeviceGeometry(
        finger_length=30e-6,
        finger_width=4e-6,
        finger_thickness=60e-6,
        gap=3e-6,
        finger_pairs=524,
        nominal_overlap=15e-6,
    )
    return DeviceParams(
        geometry=geometry,
        mechanical=MechanicalParams(mass=5.78e-6, spring_constant=326.0,
                                    damping_constant=8.45e-4),
        electret=ElectretBias(voltage=20.0, capacitance=5e-12),
        stoppers=StopperParams(engage_displacement=14e-6, stiffness=326e3),
        clamp=CapClamp.from_continuity(geometry, 14.5e-6),
    )


def default_loads() -> LoadNetwork:
    """28 MOhm on both ports, 1.94 pF parasitic per output node."""
    return LoadNetwork(resistance1=28e6, resistance2=28e6, parasitic_cap=1.94e-12)


def nominal_capacitance(geometry: DeviceGeometry) -> float:
    """Unclamped capacitance of either variable capacitor at rest."""
    return geometry.cap_per_meter * geometry.nominal_overlap


def capacitance_pair(x, geometry: DeviceGeometry, clamp: CapClamp):
    """Clamped capacitances (C1, C2) of the two variable capacitors.

    C1 loses overlap for positive displacement, C2 gains it; both
    saturate at cap_min/cap_max beyond the clamp displacement. Accepts
    scalars or arrays.
    """
    x = np.asarray(x, dtype=float)
    s = geometry.cap_per_meter
    x0 = geometry.nominal_overlap
    xc = clamp.clamp_displacement
    c1 = np.where(x > xc, clamp.cap_min,
                  np.where(x < -xc, clamp.cap_max, s * (x0 - x)))
    c2 = np.where(x > xc, clamp.cap_max,
                  np.where(x < -xc, clamp.cap_min, s * (x0 + x)))
    if c1.ndim == 0:
        return float(c1), float(c2)
    return c1, c2


def inv_cap_gradient(x, geometry: DeviceGeometry, clamp: CapClamp):
    """Derivatives d(1/C1)/dx and d(1/C2)/dx of the clamped laws.

    Zero outside the clamp window where the capacitances are constant;
    inside it, the analytic derivative of the overlap law. Accepts
    scalars or arrays.
    """
    x = np.asarray(x, dtype=float)
    s = geometry.cap_per_meter
    x0 = geometry.nominal_overlap
    xc = clamp.clamp_displacement
    inside = np.abs(x) <= xc
    # evaluate on a safe argument to avoid overflow warnings outside the window
    xin = np.where(inside, x, 0.0)
    u1 = np.where(inside, 1.0 / (s * (x0 - xin) ** 2), 0.0)
    u2 = np.where(inside, -1.0 / (s * (x0 + xin) ** 2), 0.0)
    if u1.ndim == 0:
        return float(u1), float(u2)
    return u1, u2


def stopper_force(x, stoppers: StopperParams):
    """Elastic stopper reaction: zero inside +/- engage_displacement,
    a stiff opposing spring outside. Odd and continuous in x."""
    x = np.asarray(x, dtype=float)
    xs = stoppers.engage_displacement
    ks = stoppers.stiffness
    f = np.where(x > xs, -ks * (x - xs),
                 np.where(x < -xs, -ks * (x + xs), 0.0))
    if f.ndim == 0:
        return float(f)
    return f


def couette_damping(damping: DampingGeometry, geometry: DeviceGeometry) -> float:
    """Damping coefficient for Couette (linear shear) flow in the finger
    gaps and between the mass and the cavity caps [N s/m]."""
    finger_term = (geometry.finger_pairs * geometry.finger_thickness
                   * geometry.finger_length / geometry.gap)
    return 2.0 * damping.viscosity * (finger_term + damping.mass_area / damping.cap_gap)


def transducer_force(x: float, q1: float, q2: float, params: DeviceParams) -> float:
    """Force on the transducer: suspension spring plus the electrostatic
    reaction of both charged variable capacitors."""
    u1, u2 = inv_cap_gradient(x, params.geometry, params.clamp)
    k = params.mechanical.spring_constant
    return k * x + 0.5 * q1 * q1 * u1 + 0.5 * q2 * q2 * u2


def port_voltages(x: float, q1: float, q2: float, params: DeviceParams,
                  ) -> tuple[float, float]:
    """Voltages across the two electrical ports for a given displacement
    and pair of capacitor charges."""
    c1, c2 = capacitance_pair(x, params.geometry, params.clamp)
    ve = params.electret.voltage
    ce = params.electret.capacitance
    common = ve + (q1 + q2) / ce
    return common + q1 / c1, common + q2 / c2


def dc_equilibrium_charge(params: DeviceParams) -> float:
    """Charge held by either variable capacitor in the zero-current
    steady state, where resistive loads pull both output nodes to 0 V."""
    c0 = nominal_capacitance(params.geometry)
    ce = params.electret.capacitance
    return -params.electret.voltage / (2.0 / ce + 1.0 / c0)


def linearize(params: DeviceParams) -> LinearModel:
    """Small-signal model about x = 0 with both capacitors at the
    equilibrium charge."""
    q0 = dc_equilibrium_charge(params)
    c0 = nominal_capacitance(params.geometry)
    u1, _ = inv_cap_gradient(0.0, params.geometry, params.clamp)
    alpha1 = q0 * u1
    # fixed-charge electrostatic spring, (q0^2/2) d^2(1/C1 + 1/C2)/dx^2 at 0
    kq = 2.0 * q0 * alpha1 / params.geometry.nominal_overlap
    return LinearModel(
        coupling1=alpha1,
        coupling2=-alpha1,
        nominal_cap=c0,
        equilibrium_charge=q0,
        stiffness_correction=kq,
        mechanical=params.mechanical,
        electret=params.electret,
    )
