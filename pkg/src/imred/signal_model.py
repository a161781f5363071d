"""Damped impulse-response signals: generation, perturbation, noise, normalization."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParams, ZeroEnergySignal

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class ImpulseParams:
    """Amplitude, damping (1/s) and angular frequency (rad/s) of a damped cosine."""

    amplitude: float
    damping: float
    angular_frequency: float

    def __post_init__(self):
        if not (np.isfinite(self.amplitude) and self.amplitude > 0):
            raise InvalidParams(f"amplitude must be > 0, got {self.amplitude}")
        if not (np.isfinite(self.damping) and self.damping > 0):
            raise InvalidParams(f"damping must be > 0, got {self.damping}")
        if not (np.isfinite(self.angular_frequency) and self.angular_frequency >= 0):
            raise InvalidParams(
                f"angular frequency must be >= 0, got {self.angular_frequency}"
            )

    @property
    def frequency_hz(self) -> float:
        return self.angular_frequency / TWO_PI


@dataclass(frozen=True)
class SampleGrid:
    sample_rate: float
    num_samples: int

    def __post_init__(self):
        if not (np.isfinite(self.sample_rate) and self.sample_rate > 0):
            raise InvalidParams(f"sample rate must be > 0, got {self.sample_rate}")
        if int(self.num_samples) != self.num_samples or self.num_samples <= 0:
            raise InvalidParams(f"num_samples must be a positive integer, got {self.num_samples}")

    @property
    def duration(self) -> float:
        return self.num_samples / self.sample_rate

    def times(self) -> np.ndarray:
        return np.arange(self.num_samples) / self.sample_rate


@dataclass(frozen=True)
class Signal:
    """Uniformly sampled real sequence.

    Two energy conventions are kept apart: :meth:`energy` is the
    dimensionless sum of squares used by normalization and the transforms,
    :meth:`physical_energy` carries the ``1/fs`` Riemann factor.
    """

    samples: np.ndarray = field(repr=False)
    grid: SampleGrid

    def __post_init__(self):
        x = np.asarray(self.samples, dtype=float)
        if x.ndim != 1:
            raise InvalidParams("samples must be one-dimensional")
        if x.size != self.grid.num_samples:
            raise InvalidParams(
                f"got {x.size} samples for a grid of {self.grid.num_samples}"
            )
        if not np.all(np.isfinite(x)):
            raise InvalidParams("samples must be finite")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)

    @classmethod
    def from_array(cls, samples, sample_rate: float = 1.0) -> "Signal":
        samples = np.asarray(samples, dtype=float)
        return cls(samples, SampleGrid(sample_rate, samples.size))

    @property
    def sample_rate(self) -> float:
        return self.grid.sample_rate

    def __len__(self):
        return self.grid.num_samples

    def energy(self) -> float:
        return float(np.dot(self.samples, self.samples))

    def physical_energy(self) -> float:
        return self.energy() / self.grid.sample_rate

    def scaled(self, c: float) -> "Signal":
        return Signal(c * self.samples, self.grid)

    def __add__(self, other: "Signal") -> "Signal":
        if other.grid != self.grid:
            raise InvalidParams("cannot add signals on different sample grids")
        return Signal(self.samples + other.samples, self.grid)

    def __sub__(self, other: "Signal") -> "Signal":
        return self + other.scaled(-1.0)


@dataclass(frozen=True)
class NoiseSpec:
    """White Gaussian noise at a given SNR (dB, relative to clean-signal energy)."""

    snr_db: float
    seed: int
    model: str = "white_gaussian"

    def __post_init__(self):
        if self.model != "white_gaussian":
            raise InvalidParams(f"unsupported noise model {self.model!r}")
        if math.isnan(self.snr_db) or self.snr_db == -math.inf:
            raise InvalidParams(f"snr_db must be finite or +inf, got {self.snr_db}")
        if not 0 <= int(self.seed) < 2**64:
            raise InvalidParams("seed must fit in 64 unsigned bits")


def damped_impulse(params: ImpulseParams, grid: SampleGrid) -> Signal:
    """Sample ``A exp(-alpha t) cos(omega t)`` at ``t = n/fs``, ``n = 0..N-1``.

    The ``t = 0`` sample is kept at full weight (the unit step is 1 there).
    """
    t = grid.times()
    h = params.amplitude * np.exp(-params.damping * t) * np.cos(params.angular_frequency * t)
    return Signal(h, grid)


def impulse_energy(params: ImpulseParams) -> float:
    """Closed form of the continuous energy ``int_0^inf h(t)^2 dt``,
    ``A^2 [1/(4 alpha) + alpha / (4 (alpha^2 + omega^2))]``."""
    a, w = params.damping, params.angular_frequency
    return params.amplitude**2 * (1.0 / (4.0 * a) + a / (4.0 * (a * a + w * w)))


def perturb(params: ImpulseParams, d_alpha: float, d_omega: float) -> ImpulseParams:
    return ImpulseParams(
        params.amplitude,
        params.damping + d_alpha,
        params.angular_frequency + d_omega,
    )


def add_noise(clean: Signal, spec: NoiseSpec) -> Signal:
    """Add zero-mean white Gaussian noise scaled to hit ``spec.snr_db`` exactly.

    The noise is centred and rescaled on the realised draw, so the empirical
    SNR equals the requested one up to rounding.
    """
    if spec.snr_db == math.inf:
        return clean
    e_clean = clean.energy()
    if e_clean == 0.0:
        raise ZeroEnergySignal("SNR is undefined for a zero-energy clean signal")
    rng = np.random.default_rng(int(spec.seed))
    noise = rng.standard_normal(len(clean))
    noise -= noise.mean()
    e_noise = float(np.dot(noise, noise))
    if e_noise == 0.0:
        # only reachable for N == 1 after centring
        return clean
    target = e_clean * 10.0 ** (-spec.snr_db / 10.0)
    noise *= math.sqrt(target / e_noise)
    return Signal(clean.samples + noise, clean.grid)


def l2_norm(x: Signal) -> float:
    """Dimensionless ``sqrt(sum x[n]^2)`` (no ``1/fs`` factor)."""
    return float(np.linalg.norm(x.samples))


def normalize(x: Signal) -> Signal:
    norm = l2_norm(x)
    if norm == 0.0:
        raise ZeroEnergySignal("the signal contains no energy")
    return Signal(x.samples / norm, x.grid)


def resonance_frequency(stiffness: float, mass: float) -> float:
    """Natural frequency in Hz of a single-degree-of-freedom oscillator."""
    if not stiffness > 0 or not mass > 0:
        raise InvalidParams("stiffness and mass must be positive")
    return math.sqrt(stiffness / mass) / TWO_PI
