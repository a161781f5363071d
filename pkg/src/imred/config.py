"""Flat ``section.key = value`` run configuration."""

from __future__ import annotations

import hashlib
import math
from pathlib import Path

from .detector import DetectorConfig, FamilySpec
from .energy import Region, band_region
from .errors import InvalidConfig, IOFailure
from .signal_model import TWO_PI, ImpulseParams, NoiseSpec, SampleGrid
from .synthetic import SyntheticConfig
from .transform import GridSpec, StftSpec, WaveletSpec

DEFAULTS = {
    "seed": 20241018,
    "transform.backend": "stft",
    "transform.window": "hann",
    "transform.window_length": 256,
    "transform.hop": 64,
    "transform.wavelet_center": 6.0,
    "transform.scale_min": 2.0,
    "transform.scale_max": 64.0,
    "transform.num_scales": 32,
    "transform.translation_step": 64,
    "family.generator": "rect_grid",
    "family.widths": (1, 2, 4, 8, 16),
    "family.scale_step": 8,
    "family.time_step": 4,
    "family.scale_extent": (8, 32),
    "family.time_extent": (4, 32),
    "detector.criterion": "youden",
    "eval.k": 10,
    "eval.n_boot": 2000,
    "synth.fs": 17000.0,
    "synth.n_samples": 8192,
    "synth.amplitude": 1.0,
    "synth.alpha0": 150.0,
    "synth.f0_hz": 3000.0,
    "synth.delta_alpha": 100.0,
    "synth.delta_f_hz": -150.0,
    "synth.jitter": 0.05,
    "synth.snr_db": 20.0,
    "synth.n_healthy": 20,
    "synth.n_defective": 20,
    "baseline.fourier_band_hz": (2500.0, 3500.0),
    "baseline.band_hz": (2750.0, 3250.0),
    "sensitivity.start": 0.0625,
    "sensitivity.steps": 4,
    "sensitivity.region_hz": (2750.0, 3250.0),
    "sensitivity.region_time_s": (0.0, 0.02),
}


def _format(value) -> str:
    if isinstance(value, tuple):
        return ",".join(_format(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse(key: str, text: str):
    default = DEFAULTS[key]
    text = text.strip()
    try:
        if isinstance(default, tuple):
            kind = type(default[0])
            return tuple(kind(float(p)) if kind is int else float(p)
                         for p in text.split(",") if p.strip())
        if isinstance(default, bool):
            return text.lower() in ("1", "true", "yes")
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
    except ValueError:
        raise InvalidConfig(f"bad value for {key}: {text!r}") from None
    return text


class RunConfig:
    """Every tunable of the pipeline, keyed by dotted name.

    Unknown keys are rejected so typos cannot silently fall back to defaults.
    """

    def __init__(self, values: dict | None = None):
        self.values = dict(DEFAULTS)
        for key, val in (values or {}).items():
            if key not in DEFAULTS:
                raise InvalidConfig(f"unknown config key {key!r}")
            self.values[key] = _parse(key, val) if isinstance(val, str) else val

    def __getitem__(self, key):
        return self.values[key]

    def replace(self, **updates) -> "RunConfig":
        vals = dict(self.values)
        for key, val in updates.items():
            vals[key.replace("__", ".")] = val
        return RunConfig(vals)

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        values = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InvalidConfig(f"line {lineno}: expected 'key = value'")
            key, val = (p.strip() for p in line.split("=", 1))
            values[key] = val
        return cls(values)

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise IOFailure(f"cannot read config {path}: {exc}") from exc
        return cls.from_text(text)

    def to_text(self) -> str:
        return "".join(f"{k} = {_format(self.values[k])}\n" for k in sorted(self.values))

    def fingerprint(self) -> str:
        return hashlib.sha256(self.to_text().encode("utf-8")).hexdigest()[:16]

    # -- builders -----------------------------------------------------------

    @property
    def seed(self) -> int:
        return int(self["seed"])

    def backend(self):
        kind = self["transform.backend"]
        if kind == "stft":
            return StftSpec(self["transform.window"], self["transform.window_length"],
                            self["transform.hop"])
        if kind == "wavelet":
            return WaveletSpec(self["transform.wavelet_center"])
        raise InvalidConfig(f"unknown backend {kind!r}")

    def detector(self) -> DetectorConfig:
        fam = FamilySpec(self["family.generator"], self["family.widths"],
                         self["family.scale_step"], self["family.time_step"],
                         self["family.scale_extent"], self["family.time_extent"])
        return DetectorConfig(
            backend=self.backend(),
            scale_range=(self["transform.scale_min"], self["transform.scale_max"],
                         self["transform.num_scales"]),
            translation_step=self["transform.translation_step"],
            family=fam,
            criterion=self["detector.criterion"],
            seed=self.seed,
            fingerprint=self.fingerprint(),
        )

    def grid(self, n_samples: int | None = None) -> GridSpec:
        return self.detector().grid(n_samples or self["synth.n_samples"])

    def sample_grid(self) -> SampleGrid:
        return SampleGrid(self["synth.fs"], self["synth.n_samples"])

    def base_params(self) -> ImpulseParams:
        return ImpulseParams(self["synth.amplitude"], self["synth.alpha0"],
                             TWO_PI * self["synth.f0_hz"])

    def synthetic(self) -> SyntheticConfig:
        return SyntheticConfig(
            base=self.base_params(),
            d_alpha=self["synth.delta_alpha"],
            d_omega=TWO_PI * self["synth.delta_f_hz"],
            grid=self.sample_grid(),
            noise=NoiseSpec(self["synth.snr_db"], self.seed),
            n_healthy=self["synth.n_healthy"],
            n_defective=self["synth.n_defective"],
            jitter=self["synth.jitter"],
        )

    def baseline_band(self, grid: GridSpec, fs: float) -> Region:
        lo, hi = self["baseline.band_hz"]
        return band_region(grid, fs, lo, hi)

    def sensitivity_region(self, grid: GridSpec) -> Region:
        f_lo, f_hi = self["sensitivity.region_hz"]
        t_lo, t_hi = self["sensitivity.region_time_s"]
        t_hi = None if math.isinf(t_hi) else t_hi
        return band_region(grid, self["synth.fs"], f_lo, f_hi, t_lo, t_hi)
