"""Acceleration signal synthesis: sinusoids, seeded band-limited Gaussian
noise with a prescribed flat one-sided PSD, and file-backed traces.

Noise generation is fully deterministic for a given spec: unit normals
are drawn from NumPy's PCG64 generator (Generator.standard_normal) seeded
directly with the spec seed, then scaled, so the same seed reproduces the
same samples bit for bit and rescaling the PSD only rescales amplitudes.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .device import STANDARD_GRAVITY


class InvalidSpecError(ValueError):
    pass


class OutOfRangeError(ValueError):
    pass


class EmptySignalError(ValueError):
    pass


class TooShortError(ValueError):
    pass


class SignalParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class SineSpec:
    """Sinusoidal acceleration. Amplitude in m/s^2 (use from_g for levels
    quoted in g)."""

    amplitude: float
    frequency: float
    phase: float = 0.0

    def __post_init__(self):
        if self.frequency <= 0:
            raise InvalidSpecError("frequency must be > 0")

    @classmethod
    def from_g(cls, amplitude_g: float, frequency: float, phase: float = 0.0):
        return cls(amplitude_g * STANDARD_GRAVITY, frequency, phase)


@dataclass(frozen=True)
class NoiseSpec:
    """Band-limited Gaussian noise with flat one-sided PSD psd_level
    [g^2/Hz] from DC to bandwidth [Hz]."""

    psd_level: float
    bandwidth: float
    sample_rate: float
    seed: int
    duration: float

    def __post_init__(self):
        if self.psd_level < 0:
            raise InvalidSpecError("psd_level must be >= 0")
        if self.duration <= 0:
            raise InvalidSpecError("duration must be > 0")
        if self.sample_rate < 2.0 * self.bandwidth:
            raise InvalidSpecError(
                f"sample_rate {self.sample_rate} below Nyquist for "
                f"bandwidth {self.bandwidth}")


@dataclass(frozen=True)
class SampledSignal:
    """Uniformly sampled acceleration trace in SI units."""

    start_time: float
    sample_rate: float
    samples: np.ndarray

    def __post_init__(self):
        if len(self.samples) == 0:
            raise EmptySignalError("signal has no samples")
        if not np.all(np.isfinite(self.samples)):
            raise InvalidSpecError("signal contains non-finite samples")

    @property
    def end_time(self) -> float:
        return self.start_time + (len(self.samples) - 1) / self.sample_rate

    @property
    def duration(self) -> float:
        return (len(self.samples) - 1) / self.sample_rate


ExcitationSpec = SineSpec | NoiseSpec | SampledSignal


def sine_eval(spec: SineSpec, t):
    """Instantaneous sinusoidal acceleration [m/s^2]."""
    return spec.amplitude * np.sin(2.0 * np.pi * spec.frequency * t + spec.phase)


def noise_generate(spec: NoiseSpec) -> SampledSignal:
    """Synthesize the band-limited Gaussian signal described by spec.

    White samples at the spec sample rate carry variance S * fs / 2
    (S in SI units), which makes the one-sided PSD flat at the requested
    level. When the bandwidth sits below Nyquist a zero-phase FFT
    brick-wall removes the out-of-band content without touching the
    passband level.
    """
    n = int(round(spec.duration * spec.sample_rate))
    if n < 1:
        raise InvalidSpecError("duration too short for one sample")
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    unit = rng.standard_normal(n)
    psd_si = spec.psd_level * STANDARD_GRAVITY ** 2
    samples = unit * np.sqrt(psd_si * spec.sample_rate / 2.0)
    nyquist = spec.sample_rate / 2.0
    if spec.bandwidth < nyquist * (1.0 - 1e-12):
        spectrum = np.fft.rfft(samples)
        freqs = np.fft.rfftfreq(n, d=1.0 / spec.sample_rate)
        spectrum[freqs > spec.bandwidth] = 0.0
        samples = np.fft.irfft(spectrum, n=n)
    return SampledSignal(start_time=0.0, sample_rate=spec.sample_rate,
                         samples=samples)


def signal_interpolate(sig: SampledSignal, t: float) -> float:
    """Linear interpolation between adjacent samples; exact at sample
    instants. Raises OutOfRangeError outside the signal support."""
    slack = 1e-9 / sig.sample_rate
    if t < sig.start_time - slack or t > sig.end_time + slack:
        raise OutOfRangeError(
            f"t={t} outside signal support [{sig.start_time}, {sig.end_time}]")
    u = (t - sig.start_time) * sig.sample_rate
    i = int(np.floor(u))
    i = min(max(i, 0), len(sig.samples) - 2) if len(sig.samples) > 1 else 0
    if len(sig.samples) == 1:
        return float(sig.samples[0])
    frac = min(max(u - i, 0.0), 1.0)
    return float(sig.samples[i] * (1.0 - frac) + sig.samples[i + 1] * frac)


def signal_to_file(sig: SampledSignal, path, unit: str = "mps2",
                   comment: str | None = None) -> None:
    """Write the signal CSV (header t_s,a_mps2 or t_s,a_g) with full
    float round-trip precision."""
    if unit not in ("mps2", "g"):
        raise InvalidSpecError(f"unknown unit {unit!r}")
    scale = 1.0 if unit == "mps2" else 1.0 / STANDARD_GRAVITY
    with open(path, "w") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        fh.write(f"t_s,a_{unit}\n")
        dt = 1.0 / sig.sample_rate
        for i, a in enumerate(sig.samples):
            fh.write(f"{sig.start_time + i * dt:.17g},{a * scale:.17g}\n")


def signal_from_file(path) -> SampledSignal:
    """Read an acceleration trace CSV written in the signal format.

    The header declares the unit (g values are converted to SI); sample
    spacing must be uniform to within 1e-9 relative.
    """
    path = Path(path)
    times: list[float] = []
    values: list[float] = []
    scale = None
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if scale is None:
                cols = [c.strip() for c in line.split(",")]
                if cols == ["t_s", "a_mps2"]:
                    scale = 1.0
                elif cols == ["t_s", "a_g"]:
                    scale = STANDARD_GRAVITY
                else:
                    raise SignalParseError(
                        f"expected header 't_s,a_mps2' or 't_s,a_g', got {line!r}",
                        lineno)
                continue
            cols = line.split(",")
            if len(cols) != 2:
                raise SignalParseError(f"expected 2 columns, got {len(cols)}",
                                       lineno)
            try:
                times.append(float(cols[0]))
                values.append(float(cols[1]))
            except ValueError as exc:
                raise SignalParseError(str(exc), lineno) from exc
    if scale is None or not values:
        raise EmptySignalError(f"{path} contains no samples")
    if len(values) == 1:
        raise SignalParseError("need at least 2 samples to fix the rate")
    t = np.asarray(times)
    dt = np.diff(t)
    dt0 = dt[0]
    if dt0 <= 0 or np.any(np.abs(dt - dt0) > 1e-9 * abs(dt0)):
        raise SignalParseError("sample spacing is not uniform")
    return SampledSignal(start_time=t[0], sample_rate=1.0 / dt0,
                         samples=np.asarray(values) * scale)


@dataclass(frozen=True)
class PsdReport:
    passband_mean_psd: float  # g^2/Hz
    flatness_deviation_db: float
    passed: bool


def psd_verify(sig: SampledSignal, spec: NoiseSpec,
               mean_tol: float = 0.10, flatness_tol_db: float = 1.0,
               n_bands: int = 20) -> PsdReport:
    """Check a generated signal against its noise spec.

    Welch-estimates the PSD, averages it into equal-width bands across
    (bandwidth/50, 0.9*bandwidth) to beat down estimator scatter, and
    passes when the passband mean is within mean_tol of the target and
    every band sits within flatness_tol_db of the passband mean.
    """
    from .analysis import WelchConfig, welch_psd

    cfg = WelchConfig()
    hop = cfg.segment_length - int(cfg.segment_length * cfg.overlap_fraction)
    n_segments = 1 + max(0, (len(sig.samples) - cfg.segment_length)) // hop
    if n_segments < 20:
        raise TooShortError(
            f"signal gives {n_segments} Welch segments, need >= 20")
    freqs, psd_si = welch_psd(sig.samples, sig.sample_rate, cfg)
    psd_g = psd_si / STANDARD_GRAVITY ** 2

    f_lo = spec.bandwidth / 50.0
    f_hi = 0.9 * spec.bandwidth
    in_band = (freqs > f_lo) & (freqs < f_hi)
    mean_psd = float(np.mean(psd_g[in_band]))

    edges = np.linspace(f_lo, f_hi, n_bands + 1)
    band_means = np.array([
        np.mean(psd_g[(freqs > lo) & (freqs <= hi)])
        for lo, hi in zip(edges[:-1], edges[1:])
    ])
    if mean_psd > 0.0:
        dev_db = float(np.max(np.abs(10.0 * np.log10(band_means / mean_psd))))
    else:
        dev_db = 0.0
    passed = (abs(mean_psd - spec.psd_level) <= mean_tol * spec.psd_level
              if spec.psd_level > 0 else mean_psd == 0.0)
    passed = passed and dev_db <= flatness_tol_db
    return PsdReport(passband_mean_psd=mean_psd, flatness_deviation_db=dev_db,
                     passed=passed)
