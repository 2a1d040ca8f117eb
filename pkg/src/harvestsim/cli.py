"""Command-line front end.

Subcommands: simulate, sweep, gen-noise, linearize. Exit codes: 0 on
success, 1 for configuration problems, 2 for runtime failures.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import write_trajectory
from .config import (ConfigParseError, ConfigValidationError, RunConfig,
                     load_config)
from .device import STANDARD_GRAVITY, linearize, nominal_capacitance
from .dynamics import NonFiniteError, StepUnderflowError
from .excitation import (EmptySignalError, InvalidSpecError, NoiseSpec,
                         SignalParseError, noise_generate, signal_to_file)
from .sweep import (AxisError, parse_axis, run_single, sweep_grid,
                    sweep_series)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2

_CONFIG_ERRORS = (ConfigParseError, ConfigValidationError, AxisError,
                  InvalidSpecError, SignalParseError, EmptySignalError,
                  FileNotFoundError)
_RUNTIME_ERRORS = (NonFiniteError, StepUnderflowError, ValueError, OSError)


def _header(config: RunConfig, seed) -> str:
    seed_txt = "none" if seed is None else str(seed)
    return (f"harvestsim v{__version__} config_sha256={config.config_hash} "
            f"seed={seed_txt}")


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args) -> int:
    config = load_config(args.config, seed_override=args.seed)
    out = _outdir(args)
    traj, report = run_single(config)
    header = _header(config, args.seed)
    write_trajectory(traj, out / "trajectory.csv", comment=header)
    with open(out / "report.csv", "w") as fh:
        fh.write(f"# {header}\n")
        fh.write("avg_power_W,port1_power_W,port2_power_W,msd_m2,"
                 "settle_s,window_s\n")
        fh.write(f"{report.average_power:.12g},{report.port1_power:.12g},"
                 f"{report.port2_power:.12g},"
                 f"{report.mean_square_displacement:.12g},"
                 f"{report.settle_discard:.12g},"
                 f"{report.observation_window:.12g}\n")
    if not args.no_figures:
        from .plotting import plot_phase_space, plot_timeseries
        plot_phase_space(traj, out / "phase_space.png",
                         config.device.stoppers.engage_displacement)
        plot_timeseries(traj, out / "timeseries.png")
    print(f"average power: {report.average_power * 1e9:.4g} nW "
          f"(port1 {report.port1_power * 1e9:.4g}, "
          f"port2 {report.port2_power * 1e9:.4g})")
    print(f"rms displacement: "
          f"{np.sqrt(report.mean_square_displacement) * 1e6:.4g} um")
    print(f"outputs written to {out}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    config = load_config(args.config, seed_override=args.seed)
    axes = [parse_axis(spec) for spec in args.axis]
    out = _outdir(args)
    base_seed = args.seed if args.seed is not None else 0
    if len(axes) == 1 and args.both_variants:
        result = sweep_series(config, axes[0], base_seed=base_seed,
                              jobs=args.jobs, both_variants=True)
    else:
        result = sweep_grid(config, axes, base_seed=base_seed, jobs=args.jobs)
    result.write_csv(out / "sweep.csv", comment=_header(config, base_seed))
    power_col = ("avg_power_W" if "avg_power_W" in result.rows[0]
                 else "avg_power_W_nonlinear")
    best = result.argmax(power_col)
    axis_part = ", ".join(f"{k}={best[k]:.6g}" for k in best
                          if any(k.startswith(a.name) for a in axes))
    print(f"best point: {axis_part} -> {best[power_col] * 1e9:.4g} nW")
    if not args.no_figures:
        from .plotting import plot_sweep
        plot_sweep(result, out / "sweep.png")
    print(f"outputs written to {out}")
    return EXIT_OK


def cmd_gen_noise(args) -> int:
    config = load_config(args.config, seed_override=args.seed)
    if not isinstance(config.excitation, NoiseSpec):
        raise ConfigValidationError(
            "gen-noise needs a config with excitation.type = noise")
    signal = noise_generate(config.excitation)
    signal_to_file(signal, args.output, unit="mps2",
                   comment=_header(config, config.excitation.seed))
    print(f"{len(signal.samples)} samples at {signal.sample_rate:g} Hz "
          f"written to {args.output}")
    return EXIT_OK


def cmd_linearize(args) -> int:
    config = load_config(args.config, seed_override=args.seed)
    device = config.device
    lin = linearize(device)
    mech = device.mechanical
    print(f"natural frequency f0     : {mech.natural_frequency:.6g} Hz")
    print(f"quality factor Q         : {mech.quality_factor:.6g}")
    print(f"nominal capacitance C0   : "
          f"{nominal_capacitance(device.geometry) * 1e12:.6g} pF")
    print(f"equilibrium charge q0    : {lin.equilibrium_charge * 1e12:.6g} pC")
    print(f"coupling alpha1          : {lin.coupling1:.6g} V/m")
    print(f"coupling alpha2          : {lin.coupling2:.6g} V/m")
    print(f"electret bias            : {device.electret.voltage:.6g} V")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="harvestsim",
        description="Electrostatic overlap-varying vibration energy "
                    "harvester simulator")
    parser.add_argument("--version", action="version",
                        version=f"harvestsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_out=True):
        p.add_argument("config", help="flat key-value config file")
        p.add_argument("--seed", type=int, default=None,
                       help="override / base noise seed")
        if with_out:
            p.add_argument("--out", default="out", help="output directory")
            p.add_argument("--no-figures", action="store_true",
                           help="skip PNG rendering")

    p = sub.add_parser("simulate", help="run one simulation")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="run a 1- or 2-axis sweep")
    common(p)
    p.add_argument("--axis", action="append", required=True,
                   help="axis spec: name=v1,v2,... or name=start:stop:count[:log]"
                        " (names: driveFrequency [Hz], loadResistance [Ohm],"
                        " sineAmplitude [g], noisePsdLevel [g2/Hz])")
    p.add_argument("--jobs", type=int, default=1,
                   help="parallel worker processes")
    p.add_argument("--both-variants", action="store_true",
                   help="run linear and nonlinear side by side (1 axis only)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("gen-noise", help="write a noise excitation CSV")
    common(p, with_out=False)
    p.add_argument("-o", "--output", required=True, help="output CSV path")
    p.set_defaults(func=cmd_gen_noise)

    p = sub.add_parser("linearize", help="print derived small-signal constants")
    common(p, with_out=False)
    p.set_defaults(func=cmd_linearize)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _CONFIG_ERRORS as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _RUNTIME_ERRORS as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
