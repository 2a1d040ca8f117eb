"""Figure rendering for simulation and sweep outputs.

Every CSV the CLI writes gets a companion PNG here: phase-space and
time-series views for single runs, curves or power maps for sweeps.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .analysis import phase_space_export
from .dynamics import Trajectory
from .sweep import SweepResult

# axes that read better on a log scale
_LOG_AXES = {"loadResistance_Ohm", "noisePsdLevel_g2Hz"}


def plot_phase_space(traj: Trajectory, path,
                     stopper_limit: float | None = None) -> Path:
    xv = phase_space_export(traj)
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.plot(xv[:, 0] * 1e6, xv[:, 1] * 1e3, lw=0.5)
    if stopper_limit is not None:
        for sign in (-1, 1):
            ax.axvline(sign * stopper_limit * 1e6, color="crimson",
                       ls="--", lw=0.8)
    ax.set_xlabel("displacement [um]")
    ax.set_ylabel("velocity [mm/s]")
    ax.set_title("Proof-mass phase space")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def plot_timeseries(traj: Trajectory, path) -> Path:
    fig, axes = plt.subplots(3, 1, figsize=(7, 7), sharex=True)
    axes[0].plot(traj.t, traj.x * 1e6, lw=0.6)
    axes[0].set_ylabel("x [um]")
    axes[1].plot(traj.t, traj.vn1, lw=0.6, label="port 1")
    axes[1].plot(traj.t, traj.vn2, lw=0.6, label="port 2")
    axes[1].set_ylabel("V [V]")
    axes[1].legend(loc="upper right", fontsize=8)
    axes[2].plot(traj.t, traj.power * 1e9, lw=0.6)
    axes[2].set_ylabel("p [nW]")
    axes[2].set_xlabel("t [s]")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def plot_sweep(result: SweepResult, path) -> Path:
    axis_cols = [f"{a.name}_{unit}" for a, unit in
                 ((a, _axis_unit(a.name)) for a in result.axes)]
    power_cols = [k for k in result.rows[0] if k.startswith("avg_power_W")]
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    if len(result.axes) == 1:
        xs = result.column(axis_cols[0])
        for col in power_cols:
            label = col.replace("avg_power_W", "power").strip("_") or "power"
            ax.plot(xs, result.column(col) * 1e9, "o-", ms=3, label=label)
        if axis_cols[0] in _LOG_AXES:
            ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel(axis_cols[0])
        ax.set_ylabel("average power [nW]")
        if len(power_cols) > 1:
            ax.legend()
    else:
        nx = len(result.axes[0].values)
        ny = len(result.axes[1].values)
        grid = result.column(power_cols[0]).reshape(nx, ny) * 1e9
        x0 = np.asarray(result.axes[0].values)
        x1 = np.asarray(result.axes[1].values)
        mesh = ax.pcolormesh(x1, x0, grid, shading="nearest")
        if axis_cols[1] in _LOG_AXES:
            ax.set_xscale("log")
        if axis_cols[0] in _LOG_AXES:
            ax.set_yscale("log")
        i, j = np.unravel_index(np.nanargmax(grid), grid.shape)
        ax.plot(x1[j], x0[i], "s", color="white", mec="black", ms=8)
        ax.set_xlabel(axis_cols[1])
        ax.set_ylabel(axis_cols[0])
        fig.colorbar(mesh, ax=ax, label="average power [nW]")
    ax.set_title("Sweep result")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def _axis_unit(name: str) -> str:
    from .sweep import AXIS_UNITS
    return AXIS_UNITS[name]
