"""Command-line interface: subcommands, artifacts, exit codes, and
reproducibility of the written files."""

import numpy as np
import pytest

import harvestsim as hs
from harvestsim.cli import main

SINE_CFG = ("excitation.type = sine\nexcitation.amplitude_g = 1\n"
            "excitation.frequency_Hz = 1190\n"
            "analysis.settle_s = 0.137\nanalysis.duration_s = 0.437\n")
NOISE_CFG = ("excitation.type = noise\nexcitation.psd_g2Hz = 0.01\n"
             "excitation.seed = 11\nexcitation.duration_s = 0.5\n"
             "analysis.settle_s = 0.05\nanalysis.duration_s = 0.4\n")


@pytest.fixture
def sine_config(tmp_path):
    path = tmp_path / "sine.conf"
    path.write_text(SINE_CFG)
    return path


def test_simulate_writes_artifacts(tmp_path, sine_config):
    out = tmp_path / "out"
    rc = main(["simulate", str(sine_config), "--out", str(out)])
    assert rc == 0
    traj_csv = out / "trajectory.csv"
    assert traj_csv.is_file()
    assert (out / "report.csv").is_file()
    assert (out / "phase_space.png").stat().st_size > 1000
    assert (out / "timeseries.png").stat().st_size > 1000
    header = traj_csv.read_text().splitlines()[0]
    assert header.startswith("# harvestsim v")
    assert "config_sha256=" in header and "seed=" in header
    traj = hs.read_trajectory(traj_csv)
    assert len(traj) > 1000
    report_lines = (out / "report.csv").read_text().splitlines()
    assert report_lines[1].startswith("avg_power_W")
    power = float(report_lines[2].split(",")[0])
    assert power == pytest.approx(1.3508e-07, rel=1e-3)


def test_simulate_no_figures(tmp_path, sine_config):
    out = tmp_path / "out"
    rc = main(["simulate", str(sine_config), "--out", str(out), "--no-figures"])
    assert rc == 0
    assert not (out / "phase_space.png").exists()


def test_simulate_rerun_is_byte_identical(tmp_path, sine_config):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", str(sine_config), "--out", str(out1),
                 "--no-figures"]) == 0
    assert main(["simulate", str(sine_config), "--out", str(out2),
                 "--no-figures"]) == 0
    assert (out1 / "trajectory.csv").read_bytes() == (
        out2 / "trajectory.csv").read_bytes()
    assert (out1 / "report.csv").read_bytes() == (out2 / "report.csv").read_bytes()


def test_sweep_command(tmp_path, sine_config, capsys):
    out = tmp_path / "sweep"
    rc = main(["sweep", str(sine_config), "--out", str(out),
               "--axis", "driveFrequency=1100,1190,1300"])
    assert rc == 0
    assert (out / "sweep.csv").is_file()
    assert (out / "sweep.png").stat().st_size > 1000
    captured = capsys.readouterr()
    assert "best point" in captured.out
    assert "driveFrequency_Hz=1190" in captured.out


def test_sweep_both_variants(tmp_path, sine_config):
    out = tmp_path / "sweep"
    rc = main(["sweep", str(sine_config), "--out", str(out), "--no-figures",
               "--both-variants", "--axis", "sineAmplitude=0.5,1"])
    assert rc == 0
    header = (out / "sweep.csv").read_text().splitlines()[1]
    assert "avg_power_W_linear" in header
    assert "avg_power_W_nonlinear" in header


def test_sweep_two_axes(tmp_path, sine_config):
    out = tmp_path / "sweep"
    rc = main(["sweep", str(sine_config), "--out", str(out), "--no-figures",
               "--axis", "driveFrequency=1150,1190",
               "--axis", "loadResistance=1e7,2.8e7"])
    assert rc == 0
    lines = (out / "sweep.csv").read_text().splitlines()
    assert len(lines) == 2 + 4  # comment, header, 2x2 grid


def test_gen_noise_roundtrip(tmp_path):
    cfg = tmp_path / "noise.conf"
    cfg.write_text(NOISE_CFG)
    out_csv = tmp_path / "drive.csv"
    rc = main(["gen-noise", str(cfg), "-o", str(out_csv)])
    assert rc == 0
    sig = hs.signal_from_file(out_csv)
    spec = hs.NoiseSpec(psd_level=0.01, bandwidth=5000.0, sample_rate=10000.0,
                        seed=11, duration=0.5)
    np.testing.assert_array_equal(sig.samples, hs.noise_generate(spec).samples)


def test_gen_noise_seed_override(tmp_path):
    cfg = tmp_path / "noise.conf"
    cfg.write_text(NOISE_CFG)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["gen-noise", str(cfg), "-o", str(a), "--seed", "99"]) == 0
    assert main(["gen-noise", str(cfg), "-o", str(b), "--seed", "99"]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_gen_noise_rejects_sine_config(tmp_path, sine_config):
    rc = main(["gen-noise", str(sine_config), "-o", str(tmp_path / "x.csv")])
    assert rc == 1


def test_linearize_command(sine_config, capsys):
    rc = main(["linearize", str(sine_config)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "1195.2" in out
    assert "51.37" in out
    assert "2.7837" in out


def test_missing_config_file_exit_code(tmp_path):
    rc = main(["simulate", str(tmp_path / "absent.conf"), "--out",
               str(tmp_path / "o")])
    assert rc == 1


def test_invalid_config_exit_code(tmp_path):
    cfg = tmp_path / "bad.conf"
    cfg.write_text("excitation.type = sine\n")  # missing amplitude/frequency
    rc = main(["simulate", str(cfg), "--out", str(tmp_path / "o")])
    assert rc == 1


def test_runtime_failure_exit_code(tmp_path):
    # excitation file shorter than the requested run -> runtime failure
    sig_path = tmp_path / "short.csv"
    sig_path.write_text("t_s,a_mps2\n" + "".join(
        f"{i * 1e-4:.6g},1.0\n" for i in range(20)))
    cfg = tmp_path / "run.conf"
    cfg.write_text(f"excitation.type = file\nexcitation.path = {sig_path}\n"
                   "analysis.settle_s = 0.001\nanalysis.duration_s = 0.01\n")
    rc = main(["simulate", str(cfg), "--out", str(tmp_path / "o"),
               "--no-figures"])
    assert rc == 2


def test_bad_axis_exit_code(tmp_path, sine_config):
    rc = main(["sweep", str(sine_config), "--out", str(tmp_path / "o"),
               "--axis", "warpFactor=1,2"])
    assert rc == 1
