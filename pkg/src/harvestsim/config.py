"""Flat `section.key_unit = value` configuration files.

Unspecified device keys fall back to the reference harvester; the
excitation block is the only mandatory part. Units are encoded in key
suffixes (_um, _pF, _MOhm, _Hz, _g, _g2Hz, _s, ...) and converted to SI
on load, except PSD levels which stay in g^2/Hz as the noise generator
expects them.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

from .device import (CapClamp, DeviceGeometry, DeviceParams, ElectretBias,
                     LoadNetwork, MechanicalParams, StopperParams,
                     default_device, default_loads)
from .dynamics import IntegratorConfig, ModelVariant
from .excitation import ExcitationSpec, NoiseSpec, SineSpec, signal_from_file


class ConfigParseError(ValueError):
    def __init__(self, message: str, line: int | None = None,
                 key: str | None = None):
        self.line = line
        self.key = key
        where = []
        if key:
            where.append(f"key {key!r}")
        if line is not None:
            where.append(f"line {line}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class ConfigValidationError(ValueError):
    pass


# scale factors applied to numeric values by key suffix
_UNIT_SCALES = {
    "m": 1.0, "um": 1e-6, "nm": 1e-9,
    "F": 1.0, "pF": 1e-12, "Fpm": 1.0,
    "Ohm": 1.0, "MOhm": 1e6,
    "Hz": 1.0, "kHz": 1e3,
    "g": 9.81, "mps2": 1.0,
    "g2Hz": 1.0,  # PSD levels stay in g^2/Hz
    "s": 1.0, "ms": 1e-3,
    "V": 1.0, "kg": 1.0, "mg": 1e-6,
    "Npm": 1.0, "Nspm": 1.0, "rad": 1.0,
}

# every recognized key; None marks non-numeric values
_KNOWN_KEYS = {
    "device.l_f_um", "device.w_f_um", "device.t_f_um", "device.g0_um",
    "device.N_g", "device.x0_um", "device.eps_Fpm",
    "mechanical.m_mg", "mechanical.k_Npm", "mechanical.b_Nspm",
    "electret.V_e_V", "electret.C_e_pF",
    "stopper.x_s_um", "stopper.k_s_Npm",
    "clamp.x_c_um",
    "load.R_MOhm", "load.R1_MOhm", "load.R2_MOhm", "load.C_p_pF",
    "model.variant",
    "excitation.type", "excitation.amplitude_g", "excitation.amplitude_mps2",
    "excitation.frequency_Hz", "excitation.phase_rad",
    "excitation.psd_g2Hz", "excitation.f_max_Hz", "excitation.f_s_Hz",
    "excitation.seed", "excitation.duration_s", "excitation.path",
    "integrator.rel_tol", "integrator.max_step_s", "integrator.event_tol_nm",
    "integrator.sample_interval_s",
    "analysis.settle_s", "analysis.duration_s",
}


@dataclass(frozen=True)
class RunConfig:
    device: DeviceParams
    loads: LoadNetwork
    variant: ModelVariant
    excitation: ExcitationSpec
    integrator: IntegratorConfig
    settle_discard: float
    duration: float
    config_hash: str

    def __post_init__(self):
        if self.duration <= self.settle_discard:
            raise ConfigValidationError(
                f"analysis duration {self.duration} s must exceed the settle "
                f"discard {self.settle_discard} s")


def _scaled(key: str, raw: str, line: int) -> float:
    try:
        value = float(raw)
    except ValueError as exc:
        raise ConfigParseError(f"not a number: {raw!r}", line, key) from exc
    suffix = key.rsplit("_", 1)[-1]
    return value * _UNIT_SCALES.get(suffix, 1.0)


def parse_entries(text: str) -> dict[str, tuple[str, int]]:
    """Split config text into {key: (raw value, line number)}."""
    entries: dict[str, tuple[str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigParseError("expected 'section.key = value'", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _KNOWN_KEYS:
            raise ConfigParseError("unknown key", lineno, key)
        if key in entries:
            raise ConfigParseError("duplicate key", lineno, key)
        if not value:
            raise ConfigParseError("empty value", lineno, key)
        entries[key] = (value, lineno)
    return entries


def _build_excitation(entries, settle: float, duration: float,
                      seed_override: int | None) -> ExcitationSpec:
    if "excitation.type" not in entries:
        raise ConfigValidationError("missing required key excitation.type")
    ex_type = entries["excitation.type"][0]

    def num(key, default=None):
        if key in entries:
            return _scaled(key, *entries[key])
        return default

    if ex_type == "sine":
        amp = num("excitation.amplitude_g")
        if amp is None:
            amp = num("excitation.amplitude_mps2")
        if amp is None:
            raise ConfigValidationError("sine excitation needs an amplitude")
        freq = num("excitation.frequency_Hz")
        if freq is None:
            raise ConfigValidationError("sine excitation needs a frequency")
        return SineSpec(amplitude=amp, frequency=freq,
                        phase=num("excitation.phase_rad", 0.0))
    if ex_type == "noise":
        psd = num("excitation.psd_g2Hz")
        if psd is None:
            raise ConfigValidationError("noise excitation needs a PSD level")
        seed = seed_override
        if seed is None and "excitation.seed" in entries:
            raw, line = entries["excitation.seed"]
            try:
                seed = int(raw)
            except ValueError as exc:
                raise ConfigParseError("seed must be an integer", line,
                                       "excitation.seed") from exc
        if seed is None:
            seed = 0
        return NoiseSpec(psd_level=psd,
                         bandwidth=num("excitation.f_max_Hz", 5000.0),
                         sample_rate=num("excitation.f_s_Hz", 10000.0),
                         seed=seed,
                         duration=num("excitation.duration_s",
                                      settle + duration + 1e-3))
    if ex_type == "file":
        if "excitation.path" not in entries:
            raise ConfigValidationError("file excitation needs a path")
        return signal_from_file(entries["excitation.path"][0])
    raise ConfigValidationError(
        f"excitation.type must be sine, noise, or file, got {ex_type!r}")


def parse_config(text: str, seed_override: int | None = None) -> RunConfig:
    entries = parse_entries(text)

    def num(key, default):
        if key in entries:
            return _scaled(key, *entries[key])
        return default

    defaults = default_device()
    g = defaults.geometry
    geometry = DeviceGeometry(
        finger_length=num("device.l_f_um", g.finger_length),
        finger_width=num("device.w_f_um", g.finger_width),
        finger_thickness=num("device.t_f_um", g.finger_thickness),
        gap=num("device.g0_um", g.gap),
        finger_pairs=int(num("device.N_g", g.finger_pairs)),
        nominal_overlap=num("device.x0_um", g.nominal_overlap),
        permittivity=num("device.eps_Fpm", g.permittivity),
    )
    try:
        device = DeviceParams(
            geometry=geometry,
            mechanical=MechanicalParams(
                mass=num("mechanical.m_mg", defaults.mechanical.mass),
                spring_constant=num("mechanical.k_Npm",
                                    defaults.mechanical.spring_constant),
                damping_constant=num("mechanical.b_Nspm",
                                     defaults.mechanical.damping_constant)),
            electret=ElectretBias(
                voltage=num("electret.V_e_V", defaults.electret.voltage),
                capacitance=num("electret.C_e_pF",
                                defaults.electret.capacitance)),
            stoppers=StopperParams(
                engage_displacement=num("stopper.x_s_um",
                                        defaults.stoppers.engage_displacement),
                stiffness=num("stopper.k_s_Npm", defaults.stoppers.stiffness)),
            clamp=CapClamp.from_continuity(
                geometry, num("clamp.x_c_um",
                              defaults.clamp.clamp_displacement)),
        )
        shared = num("load.R_MOhm", None)
        base_loads = default_loads()
        loads = LoadNetwork(
            resistance1=num("load.R1_MOhm",
                            shared if shared is not None
                            else base_loads.resistance1),
            resistance2=num("load.R2_MOhm",
                            shared if shared is not None
                            else base_loads.resistance2),
            parasitic_cap=num("load.C_p_pF", base_loads.parasitic_cap),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigParseError):
            raise
        raise ConfigValidationError(str(exc)) from exc

    variant_raw = entries.get("model.variant", ("nonlinear", 0))[0]
    try:
        variant = ModelVariant(variant_raw)
    except ValueError as exc:
        raise ConfigValidationError(
            f"model.variant must be linear or nonlinear, got {variant_raw!r}"
        ) from exc

    is_noise = entries.get("excitation.type", ("", 0))[0] == "noise"
    settle = num("analysis.settle_s", 0.137)
    duration = num("analysis.duration_s", 60.0 if is_noise else 1.0)
    excitation = _build_excitation(entries, settle, duration, seed_override)

    try:
        integrator = IntegratorConfig(
            rel_tol=num("integrator.rel_tol", 1e-6),
            max_step=num("integrator.max_step_s", 5e-5),
            event_tol=num("integrator.event_tol_nm", 1e-9),
            sample_interval=num("integrator.sample_interval_s",
                                1e-4 if is_noise else 1e-5),
        )
    except ValueError as exc:
        raise ConfigValidationError(str(exc)) from exc

    digest = hashlib.sha256(text.encode()).hexdigest()[:16]
    return RunConfig(device=device, loads=loads, variant=variant,
                     excitation=excitation, integrator=integrator,
                     settle_discard=settle, duration=duration,
                     config_hash=digest)


def load_config(path, seed_override: int | None = None) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigParseError(f"config file not found: {path}")
    return parse_config(path.read_text(), seed_override=seed_override)
