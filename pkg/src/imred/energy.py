"""Energy Concentration Index over rectangular time-frequency regions."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidConfig, RegionOutOfBounds, ZeroEnergySignal
from .transform import CoefficientField, GridSpec, estimate_frame_bounds, project


@dataclass(frozen=True)
class Region:
    """Finite union of inclusive index rectangles
    ``(scale_lo, scale_hi, time_lo, time_hi)``.

    Overlaps are harmless: aggregation goes through :meth:`mask`, so each
    grid cell counts once.
    """

    rectangles: tuple = ()

    def __post_init__(self):
        rects = tuple(tuple(int(v) for v in r) for r in self.rectangles)
        for r in rects:
            if len(r) != 4:
                raise RegionOutOfBounds(f"rectangle needs 4 indices, got {r}")
            s0, s1, t0, t1 = r
            if s0 > s1 or t0 > t1:
                raise RegionOutOfBounds(f"rectangle {r} has lo > hi")
        object.__setattr__(self, "rectangles", rects)

    @classmethod
    def full(cls, shape) -> "Region":
        m, b = shape
        return cls(((0, m - 1, 0, b - 1),))

    @classmethod
    def scale_band(cls, lo: int, hi: int, shape) -> "Region":
        return cls(((lo, hi, 0, shape[1] - 1),))

    def union(self, other: "Region") -> "Region":
        return Region(self.rectangles + other.rectangles)

    def check(self, shape) -> None:
        m, b = shape
        for s0, s1, t0, t1 in self.rectangles:
            if s0 < 0 or t0 < 0 or s1 >= m or t1 >= b:
                raise RegionOutOfBounds(
                    f"rectangle {(s0, s1, t0, t1)} outside a {m}x{b} grid"
                )

    def mask(self, shape) -> np.ndarray:
        self.check(shape)
        out = np.zeros(shape, dtype=bool)
        for s0, s1, t0, t1 in self.rectangles:
            out[s0:s1 + 1, t0:t1 + 1] = True
        return out

    def area(self, shape) -> int:
        return int(self.mask(shape).sum())

    def sort_key(self, shape):
        """Tie-break order for region search: fewer cells, then coordinates."""
        return (self.area(shape), self.rectangles)

    # -- text form ----------------------------------------------------------

    def to_lines(self, shape) -> list[str]:
        self.check(shape)
        lines = [f"region {shape[0]} {shape[1]}"]
        lines += ["rect {} {} {} {}".format(*r) for r in self.rectangles]
        return lines

    def to_text(self, shape) -> str:
        return "\n".join(self.to_lines(shape)) + "\n"

    @classmethod
    def from_text(cls, text: str, shape=None) -> "Region":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0].split()[0] != "region":
            raise InvalidConfig("region text must start with 'region M B'")
        head = lines[0].split()
        dims = (int(head[1]), int(head[2]))
        if shape is not None and tuple(shape) != dims:
            raise RegionOutOfBounds(f"region bound to grid {dims}, not {tuple(shape)}")
        rects = []
        for ln in lines[1:]:
            parts = ln.split()
            if parts[0] != "rect" or len(parts) != 5:
                raise InvalidConfig(f"bad region line {ln!r}")
            rects.append(tuple(int(p) for p in parts[1:]))
        region = cls(tuple(rects))
        region.check(dims)
        return region

    def to_inline(self) -> str:
        """Single-line form ``rect s0 s1 t0 t1; rect ...`` used in model files."""
        return "; ".join("rect {} {} {} {}".format(*r) for r in self.rectangles)

    @classmethod
    def from_inline(cls, text: str) -> "Region":
        text = text.strip()
        if not text:
            return cls(())
        rects = []
        for part in text.split(";"):
            words = part.split()
            if len(words) != 5 or words[0] != "rect":
                raise InvalidConfig(f"bad rectangle {part.strip()!r}")
            rects.append(tuple(int(v) for v in words[1:]))
        return cls(tuple(rects))


@dataclass(frozen=True)
class EciValue:
    value: float
    region: Region
    normalized: Optional[float] = None


def eci(fld: CoefficientField, region: Region) -> EciValue:
    """Weighted energy ``sum_{cells in region} |W|^2 w_k Delta b``."""
    mask = region.mask(fld.coefficients.shape)
    value = float(np.sum(fld.weighted_energy()[mask]))
    rho = value / fld.source_energy if fld.source_energy > 0 else None
    return EciValue(value, region, rho)


def concentration_ratio(fld: CoefficientField, region: Region) -> float:
    """ECI divided by the energy of the projected signal (scale invariant)."""
    if fld.source_energy <= 0:
        raise ZeroEnergySignal("concentration ratio undefined for a zero-energy signal")
    return eci(fld, region).value / fld.source_energy


def eci_stability_gap(x, y, grid: GridSpec, region: Region, upper_bound: float | None = None):
    """Return ``(|ECI(x) - ECI(y)|, B ||x - y|| (||x|| + ||y||))``.

    ``upper_bound`` is the upper frame bound ``B``; it is estimated on
    ``grid`` when omitted.  The first value never exceeds the second.
    """
    xs = getattr(x, "samples", x)
    ys = getattr(y, "samples", y)
    if upper_bound is None:
        upper_bound = estimate_frame_bounds(grid)[1]
    lhs = abs(eci(project(xs, grid), region).value - eci(project(ys, grid), region).value)
    rhs = upper_bound * float(np.linalg.norm(xs - ys)) * (
        float(np.linalg.norm(xs)) + float(np.linalg.norm(ys))
    )
    return lhs, rhs


def band_region(grid: GridSpec, fs: float, f_lo: float, f_hi: float,
                t_lo: float | None = None, t_hi: float | None = None) -> Region:
    """Rectangle of rows with peak frequency in ``[f_lo, f_hi]`` Hz and columns
    whose centre time lies in ``[t_lo, t_hi]`` seconds (all columns if unset)."""
    freqs = grid.row_frequencies(fs)
    rows = np.flatnonzero((freqs >= f_lo) & (freqs <= f_hi))
    times = grid.column_centres() / fs
    keep = np.ones(times.size, dtype=bool)
    if t_lo is not None:
        keep &= times >= t_lo
    if t_hi is not None:
        keep &= times <= t_hi
    cols = np.flatnonzero(keep)
    if rows.size == 0 or cols.size == 0:
        raise RegionOutOfBounds(
            f"no grid cells in band [{f_lo}, {f_hi}] Hz, time [{t_lo}, {t_hi}] s"
        )
    return Region(((int(rows.min()), int(rows.max()), int(cols.min()), int(cols.max())),))
