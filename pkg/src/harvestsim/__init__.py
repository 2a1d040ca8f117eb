"""Simulator for an electrostatic in-plane overlap-varying vibration
energy harvester: lumped electromechanical model, adaptive integration
through stopper impacts, broadband excitation synthesis, and sweep
tooling."""

__version__ = "0.1.0"

from .analysis import (EnergyReport, PowerReport, WelchConfig, average_power,
                       displacement_stats, energy_audit, phase_space_export,
                       read_trajectory, welch_psd, write_trajectory)
from .config import RunConfig, load_config, parse_config
from .device import (CapClamp, DampingGeometry, DeviceGeometry, DeviceParams,
                     ElectretBias, LinearModel, LoadNetwork, MechanicalParams,
                     StopperParams, capacitance_pair, couette_damping,
                     dc_equilibrium_charge, default_device, default_loads,
                     inv_cap_gradient, linearize, nominal_capacitance,
                     port_voltages, stopper_force, transducer_force)
from .dynamics import (IntegratorConfig, ModelVariant, SimState, Trajectory,
                       default_initial, electrical_rates, integrate,
                       mechanical_rate)
from .excitation import (NoiseSpec, SampledSignal, SineSpec, noise_generate,
                         psd_verify, signal_from_file, signal_interpolate,
                         signal_to_file, sine_eval)
from .sweep import (SweepAxis, SweepResult, parse_axis, point_seed,
                    run_single, sweep_grid, sweep_series)
