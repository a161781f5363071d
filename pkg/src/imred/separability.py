"""Class statistics, Fisher-type separability and exhaustive region search."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats

from .energy import Region
from .errors import DegenerateVariances, EmptyInput, InsufficientSamples, InvalidConfig
from .transform import CoefficientField


@dataclass(frozen=True)
class ClassStats:
    mean: float
    variance: float
    count: int


def class_stats(scores: Sequence[float]) -> ClassStats:
    """Sample mean and unbiased variance (0 for a single score)."""
    z = np.asarray(scores, dtype=float)
    if z.size == 0:
        raise EmptyInput("class_stats needs at least one score")
    var = float(np.var(z, ddof=1)) if z.size > 1 else 0.0
    return ClassStats(float(np.mean(z)), var, int(z.size))


def fisher_j(h: ClassStats, d: ClassStats) -> float:
    """``(mu_d - mu_h)^2 / (var_d + var_h)``.

    A zero variance sum gives 0 when the means agree and ``inf`` otherwise.
    """
    num = (d.mean - h.mean) ** 2
    den = d.variance + h.variance
    if den == 0.0:
        return 0.0 if num == 0.0 else math.inf
    return num / den


def fisher_j_scores(scores_h, scores_d) -> float:
    return fisher_j(class_stats(scores_h), class_stats(scores_d))


def welch_t_test(scores_h, scores_d) -> tuple[float, float]:
    """Two-sided Welch t-test; ``t > 0`` when the defective mean is larger."""
    h = np.asarray(scores_h, dtype=float)
    d = np.asarray(scores_d, dtype=float)
    if h.size < 2 or d.size < 2:
        raise InsufficientSamples("Welch test needs at least 2 scores per class")
    vh = np.var(h, ddof=1) / h.size
    vd = np.var(d, ddof=1) / d.size
    se2 = vh + vd
    if se2 == 0.0:
        raise DegenerateVariances("both classes have zero variance")
    t = (d.mean() - h.mean()) / math.sqrt(se2)
    df = se2**2 / (vh**2 / (h.size - 1) + vd**2 / (d.size - 1))
    p = 2.0 * stats.t.sf(abs(t), df)
    return float(t), float(min(p, 1.0))


@dataclass(frozen=True)
class AdmissibleFamily:
    """Finite family of candidate regions on an ``M x B`` grid.

    ``scale_bands``
        every contiguous band of scale rows of each width in ``widths``,
        spanning all translations.
    ``rect_grid``
        rectangles whose corners sit on a ``scale_step`` x ``time_step``
        lattice, with extents in ``[min, max]`` along each axis (extents are
        stepped by the same lattice).
    """

    generator: str
    shape: tuple
    widths: tuple = ()
    scale_step: int = 1
    time_step: int = 1
    scale_extent: tuple = (1, 1)
    time_extent: tuple = (1, 1)

    def __post_init__(self):
        if self.generator not in ("scale_bands", "rect_grid"):
            raise InvalidConfig(f"unknown family generator {self.generator!r}")
        object.__setattr__(self, "shape", tuple(int(v) for v in self.shape))
        object.__setattr__(self, "widths", tuple(int(v) for v in self.widths))
        if min(self.scale_step, self.time_step) < 1:
            raise InvalidConfig("family steps must be >= 1")

    @classmethod
    def scale_bands(cls, shape, widths) -> "AdmissibleFamily":
        return cls("scale_bands", shape, widths=tuple(widths))

    @classmethod
    def rect_grid(cls, shape, scale_step, time_step, scale_extent, time_extent):
        return cls("rect_grid", shape, scale_step=scale_step, time_step=time_step,
                   scale_extent=tuple(scale_extent), time_extent=tuple(time_extent))

    def rect_array(self) -> np.ndarray:
        """All rectangles as an ``(R, 4)`` integer array (inclusive bounds)."""
        m, b = self.shape
        if self.generator == "scale_bands":
            rows = [(s, s + w - 1, 0, b - 1)
                    for w in self.widths if 1 <= w <= m
                    for s in range(m - w + 1)]
        else:
            s_ext = range(self.scale_extent[0], min(self.scale_extent[1], m) + 1, self.scale_step)
            t_ext = range(self.time_extent[0], min(self.time_extent[1], b) + 1, self.time_step)
            rows = [(s, s + ds - 1, t, t + dt - 1)
                    for ds in s_ext if ds >= 1
                    for s in range(0, m - ds + 1, self.scale_step)
                    for dt in t_ext if dt >= 1
                    for t in range(0, b - dt + 1, self.time_step)]
        arr = np.array(rows, dtype=np.int64).reshape(-1, 4)
        return arr

    def regions(self) -> list[Region]:
        return [Region((tuple(r),)) for r in self.rect_array().tolist()]

    def __len__(self):
        return len(self.rect_array())


def _integral_images(fields: Sequence[CoefficientField]) -> np.ndarray:
    e = np.stack([f.weighted_energy() for f in fields])
    p = np.zeros((e.shape[0], e.shape[1] + 1, e.shape[2] + 1))
    p[:, 1:, 1:] = e.cumsum(axis=1).cumsum(axis=2)
    return p


def rectangle_scores(fields: Sequence[CoefficientField], rects: np.ndarray) -> np.ndarray:
    """ECI of every field over every rectangle, shape ``(n_fields, R)``.

    Uses summed-area tables, so each rectangle costs O(1) per field.
    """
    p = _integral_images(fields)
    s0, s1, t0, t1 = (rects[:, i] for i in range(4))
    out = p[:, s1 + 1, t1 + 1] - p[:, s0, t1 + 1] - p[:, s1 + 1, t0] + p[:, s0, t0]
    return np.maximum(out, 0.0)


def _fisher_columns(scores: np.ndarray, is_d: np.ndarray, require_increase=False) -> np.ndarray:
    h, d = scores[~is_d], scores[is_d]
    gap = d.mean(axis=0) - h.mean(axis=0)
    num = gap**2
    den = d.var(axis=0, ddof=1) + h.var(axis=0, ddof=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        j = num / den
    j[den == 0] = np.where(num[den == 0] == 0, 0.0, np.inf)
    if require_increase:
        j[gap <= 0] = 0.0
    return j


def _as_defective(labels) -> np.ndarray:
    out = []
    for lab in labels:
        if isinstance(lab, str):
            out.append(lab == "defective")
        else:
            out.append(bool(lab))
    return np.array(out, dtype=bool)


def j_table(fields: Sequence[CoefficientField], labels, family: AdmissibleFamily,
            require_increase: bool = False):
    """Return ``(rects, J)`` for every region of ``family``.

    With ``require_increase`` a region scores 0 unless the defective mean
    exceeds the healthy one, which is the orientation the threshold rule
    ``defective iff z > tau`` assumes.
    """
    is_d = _as_defective(labels)
    if is_d.sum() < 2 or (~is_d).sum() < 2:
        raise InsufficientSamples("region search needs at least 2 samples per class")
    rects = family.rect_array()
    if rects.shape[0] == 0:
        raise InvalidConfig("admissible family is empty")
    shape = fields[0].coefficients.shape
    if tuple(shape) != tuple(family.shape):
        raise InvalidConfig(f"family bound to grid {family.shape}, fields are {shape}")
    return rects, _fisher_columns(rectangle_scores(fields, rects), is_d, require_increase)


def optimize_region(fields: Sequence[CoefficientField], labels, family: AdmissibleFamily,
                    require_increase: bool = False):
    """Exhaustive ``argmax_J`` over the family (see :func:`j_table`).

    Ties go to the smaller region, then to the lexicographically smallest
    rectangle, so the result does not depend on enumeration order.
    """
    rects, j = j_table(fields, labels, family, require_increase)
    best = np.flatnonzero(j == np.max(j))
    areas = (rects[best, 1] - rects[best, 0] + 1) * (rects[best, 3] - rects[best, 2] + 1)
    keys = sorted(zip(areas.tolist(), map(tuple, rects[best].tolist())))
    return Region((keys[0][1],)), float(np.max(j))
