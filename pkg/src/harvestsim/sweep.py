"""Single runs and deterministic parameter sweeps.

Grid points are independent; with jobs > 1 they run in worker processes
and results are collected back in grid order, so output never depends on
scheduling. Broadband points get per-point seeds from a SeedSequence mix
of (base seed, flat grid index), which keeps sweeps reproducible but
decorrelated across points.
"""

from __future__ import annotations

import dataclasses
import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .analysis import PowerReport, average_power, displacement_stats
from .config import RunConfig
from .dynamics import (ModelVariant, Trajectory, default_initial, integrate)
from .excitation import NoiseSpec, SineSpec

AXIS_NAMES = ("driveFrequency", "loadResistance", "sineAmplitude",
              "noisePsdLevel")
# units used in sweep CSV column headers
AXIS_UNITS = {"driveFrequency": "Hz", "loadResistance": "Ohm",
              "sineAmplitude": "g", "noisePsdLevel": "g2Hz"}


class AxisError(ValueError):
    pass


@dataclass(frozen=True)
class SweepAxis:
    """One sweep dimension. Values are Hz, Ohm, g, or g^2/Hz depending
    on the parameter."""

    name: str
    values: tuple[float, ...]

    def __post_init__(self):
        if self.name not in AXIS_NAMES:
            raise AxisError(f"unknown axis {self.name!r}, "
                            f"expected one of {AXIS_NAMES}")
        if len(self.values) == 0:
            raise AxisError("axis needs at least one value")
        if any(v <= 0 for v in self.values):
            raise AxisError(f"{self.name} values must be > 0")


def parse_axis(spec: str) -> SweepAxis:
    """Parse 'name=v1,v2,...' or 'name=start:stop:count[:log]'."""
    if "=" not in spec:
        raise AxisError(f"axis spec {spec!r} missing '='")
    name, body = (part.strip() for part in spec.split("=", 1))
    if ":" in body:
        parts = body.split(":")
        if len(parts) not in (3, 4):
            raise AxisError(f"range spec {body!r} needs start:stop:count[:log]")
        try:
            start, stop = float(parts[0]), float(parts[1])
            count = int(parts[2])
        except ValueError as exc:
            raise AxisError(f"bad range spec {body!r}") from exc
        if count < 1:
            raise AxisError("range count must be >= 1")
        if len(parts) == 4:
            if parts[3] != "log":
                raise AxisError(f"unknown range mode {parts[3]!r}")
            if start <= 0:
                raise AxisError("log range needs start > 0")
            values = np.geomspace(start, stop, count)
        else:
            values = np.linspace(start, stop, count)
    else:
        try:
            values = np.array([float(v) for v in body.split(",")])
        except ValueError as exc:
            raise AxisError(f"bad value list {body!r}") from exc
    return SweepAxis(name=name, values=tuple(float(v) for v in values))


def apply_axis_value(config: RunConfig, name: str, value: float) -> RunConfig:
    """Return a config with one swept parameter replaced."""
    if name == "loadResistance":
        loads = dataclasses.replace(config.loads, resistance1=value,
                                    resistance2=value)
        return dataclasses.replace(config, loads=loads)
    if name == "driveFrequency":
        if not isinstance(config.excitation, SineSpec):
            raise AxisError("driveFrequency sweep needs a sine excitation")
        ex = dataclasses.replace(config.excitation, frequency=value)
        return dataclasses.replace(config, excitation=ex)
    if name == "sineAmplitude":
        if not isinstance(config.excitation, SineSpec):
            raise AxisError("sineAmplitude sweep needs a sine excitation")
        ex = dataclasses.replace(config.excitation, amplitude=value * 9.81)
        return dataclasses.replace(config, excitation=ex)
    if name == "noisePsdLevel":
        if not isinstance(config.excitation, NoiseSpec):
            raise AxisError("noisePsdLevel sweep needs a noise excitation")
        ex = dataclasses.replace(config.excitation, psd_level=value)
        return dataclasses.replace(config, excitation=ex)
    raise AxisError(f"unknown axis {name!r}")


def point_seed(base_seed: int, index: int) -> int:
    """Deterministic per-point seed: first word of
    SeedSequence([base_seed, index])."""
    return int(np.random.SeedSequence([base_seed, index]).generate_state(
        1, np.uint64)[0])


def run_single(config: RunConfig) -> tuple[Trajectory, PowerReport]:
    """Integrate one configuration from the DC operating point and
    reduce it to a power report."""
    initial = default_initial(config.device, config.variant)
    traj = integrate(config.variant, config.device, config.loads,
                     config.excitation, initial,
                     (0.0, config.duration), config.integrator)
    report = average_power(traj, config.loads, config.settle_discard)
    return traj, report


def _evaluate_point(config: RunConfig, variants: tuple[ModelVariant, ...],
                    ) -> dict:
    row: dict = {}
    for variant in variants:
        suffix = "" if len(variants) == 1 else f"_{variant.value}"
        cfg = dataclasses.replace(config, variant=variant)
        try:
            traj, report = run_single(cfg)
            peak, contact = displacement_stats(
                traj, cfg.device.stoppers.engage_displacement,
                cfg.settle_discard)
            row.update({
                f"avg_power_W{suffix}": report.average_power,
                f"msd_m2{suffix}": report.mean_square_displacement,
                f"peak_x_m{suffix}": peak,
                f"contact_fraction{suffix}": contact,
                f"error{suffix}": "",
            })
        except Exception as exc:  # per-point failures stay in the table
            row.update({
                f"avg_power_W{suffix}": np.nan,
                f"msd_m2{suffix}": np.nan,
                f"peak_x_m{suffix}": np.nan,
                f"contact_fraction{suffix}": np.nan,
                f"error{suffix}": f"{type(exc).__name__}: {exc}",
            })
    return row


@dataclass(frozen=True)
class SweepResult:
    axes: tuple[SweepAxis, ...]
    rows: tuple[dict, ...]

    def argmax(self, column: str = "avg_power_W") -> dict:
        best = None
        for row in self.rows:
            val = row.get(column)
            if val is None or not np.isfinite(val):
                continue
            if best is None or val > best[column]:
                best = row
        if best is None:
            raise ValueError(f"no finite values in column {column!r}")
        return best

    def column(self, name: str) -> np.ndarray:
        return np.array([row[name] for row in self.rows])

    def write_csv(self, path, comment: str | None = None) -> None:
        keys = list(self.rows[0].keys())
        with open(path, "w") as fh:
            if comment:
                fh.write(f"# {comment}\n")
            fh.write(",".join(keys) + "\n")
            for row in self.rows:
                cells = []
                for key in keys:
                    val = row[key]
                    if isinstance(val, str):
                        cells.append(val.replace(",", ";"))
                    elif isinstance(val, (int, np.integer)):
                        cells.append(str(int(val)))
                    else:
                        cells.append(f"{val:.12g}")
                fh.write(",".join(cells) + "\n")


def sweep_grid(config: RunConfig, axes: list[SweepAxis] | tuple[SweepAxis, ...],
               base_seed: int = 0, jobs: int = 1,
               variants: tuple[ModelVariant, ...] | None = None) -> SweepResult:
    """Evaluate every point of a 1- or 2-axis grid.

    Rows come out in grid order (last axis fastest) no matter how many
    workers run; failed points keep their row with the error recorded.
    """
    axes = tuple(axes)
    if not 1 <= len(axes) <= 2:
        raise AxisError("sweeps support 1 or 2 axes")
    if variants is None:
        variants = (config.variant,)

    configs = []
    meta = []
    for index, combo in enumerate(itertools.product(*(a.values for a in axes))):
        cfg = config
        for axis, value in zip(axes, combo):
            cfg = apply_axis_value(cfg, axis.name, value)
        seed = ""
        if isinstance(cfg.excitation, NoiseSpec):
            seed = point_seed(base_seed, index)
            cfg = dataclasses.replace(
                cfg, excitation=dataclasses.replace(cfg.excitation, seed=seed))
        configs.append(cfg)
        meta.append((combo, seed))

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_evaluate_point, configs,
                                    [variants] * len(configs)))
    else:
        results = [_evaluate_point(cfg, variants) for cfg in configs]

    rows = []
    for (combo, seed), result in zip(meta, results):
        row = {f"{axis.name}_{AXIS_UNITS[axis.name]}": value
               for axis, value in zip(axes, combo)}
        row.update(result)
        row["seed"] = seed
        rows.append(row)
    return SweepResult(axes=axes, rows=tuple(rows))


def sweep_series(config: RunConfig, axis: SweepAxis, base_seed: int = 0,
                 jobs: int = 1, both_variants: bool = False) -> SweepResult:
    """One-dimensional sweep, optionally running the linear and nonlinear
    variants side by side in paired columns."""
    variants = ((ModelVariant.LINEAR, ModelVariant.NONLINEAR)
                if both_variants else (config.variant,))
    return sweep_grid(config, (axis,), base_seed=base_seed, jobs=jobs,
                      variants=variants)
