"""Parametric healthy/defective datasets and first-order sensitivity analysis."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .dataset import LabeledDataset, LabeledItem
from .energy import Region, eci
from .errors import InvalidParams
from .signal_model import (
    TWO_PI,
    ImpulseParams,
    NoiseSpec,
    SampleGrid,
    Signal,
    add_noise,
    damped_impulse,
    perturb,
)
from .transform import CoefficientField, GridSpec, project


@dataclass(frozen=True)
class SyntheticConfig:
    """Healthy class at ``base``, defective class at ``base + (d_alpha, d_omega)``.

    ``jitter`` is the log-normal relative spread applied independently to
    damping and angular frequency of every sample.  ``noise.seed`` is the
    root seed; ``noise.snr_db = inf`` disables noise.
    """

    base: ImpulseParams = ImpulseParams(1.0, 150.0, TWO_PI * 3000.0)
    d_alpha: float = 100.0
    d_omega: float = -TWO_PI * 150.0
    grid: SampleGrid = SampleGrid(17000.0, 8192)
    noise: NoiseSpec = NoiseSpec(20.0, 20241018)
    n_healthy: int = 20
    n_defective: int = 20
    jitter: float = 0.05

    def __post_init__(self):
        if self.base.damping + self.d_alpha <= 0:
            raise InvalidParams("perturbed damping must stay positive")
        if self.base.angular_frequency + self.d_omega < 0:
            raise InvalidParams("perturbed angular frequency must stay >= 0")
        if self.n_healthy < 1 or self.n_defective < 1:
            raise InvalidParams("need at least one sample per class")
        if self.jitter < 0:
            raise InvalidParams("jitter must be >= 0")

    @property
    def defective(self) -> ImpulseParams:
        return perturb(self.base, self.d_alpha, self.d_omega)

    def with_seed(self, seed: int) -> "SyntheticConfig":
        return replace(self, noise=replace(self.noise, seed=int(seed)))


def _sample(cfg: SyntheticConfig, params: ImpulseParams, class_idx: int, i: int) -> Signal:
    ss = np.random.SeedSequence(int(cfg.noise.seed), spawn_key=(class_idx, i))
    rng = np.random.default_rng(ss)
    za, zw = rng.standard_normal(2)
    noise_seed = int(ss.generate_state(1, np.uint64)[0])
    p = ImpulseParams(
        params.amplitude,
        params.damping * math.exp(cfg.jitter * za),
        params.angular_frequency * math.exp(cfg.jitter * zw),
    )
    clean = damped_impulse(p, cfg.grid)
    return add_noise(clean, replace(cfg.noise, seed=noise_seed))


def generate_dataset(cfg: SyntheticConfig) -> LabeledDataset:
    """Each sample draws from its own seed sequence keyed by (class, index),
    so the dataset does not depend on generation order."""
    items = [
        LabeledItem(_sample(cfg, cfg.base, 0, i), "healthy", f"h{i:03d}")
        for i in range(cfg.n_healthy)
    ]
    items += [
        LabeledItem(_sample(cfg, cfg.defective, 1, i), "defective", f"d{i:03d}")
        for i in range(cfg.n_defective)
    ]
    return LabeledDataset(tuple(items))


def param_derivatives(params: ImpulseParams, grid: SampleGrid) -> tuple[Signal, Signal]:
    """Analytic partial derivatives of the damped cosine w.r.t. damping and
    angular frequency."""
    t = grid.times()
    env = params.amplitude * np.exp(-params.damping * t)
    wt = params.angular_frequency * t
    return (
        Signal(-t * env * np.cos(wt), grid),
        Signal(-t * env * np.sin(wt), grid),
    )


def _weighted_norm(fld_coeffs: np.ndarray, fld: CoefficientField) -> float:
    return math.sqrt(float(np.sum(np.abs(fld_coeffs) ** 2 * fld.cell_weights()[:, None])))


@dataclass(frozen=True)
class SensitivityResult:
    predicted: np.ndarray
    exact: np.ndarray
    residual: float


def coefficient_sensitivity(base: ImpulseParams, d_alpha: float, d_omega: float,
                            grid: GridSpec, sample_grid: SampleGrid) -> SensitivityResult:
    """Compare the linearised coefficient change with the exact one.

    ``residual`` is the weighted norm of ``exact - predicted``.
    """
    hh = damped_impulse(base, sample_grid)
    hd = damped_impulse(perturb(base, d_alpha, d_omega), sample_grid)
    da, dw = param_derivatives(base, sample_grid)
    fa, fw = project(da, grid), project(dw, grid)
    predicted = fa.coefficients * d_alpha + fw.coefficients * d_omega
    exact = project(hd, grid).coefficients - project(hh, grid).coefficients
    return SensitivityResult(predicted, exact, _weighted_norm(exact - predicted, fa))


def eci_first_order_variation(base: ImpulseParams, d_alpha: float, d_omega: float,
                              grid: GridSpec, region: Region,
                              sample_grid: SampleGrid) -> tuple[float, float]:
    """Return ``(predicted, exact)`` change of the ECI over ``region``.

    The prediction is ``2 Re sum_region W_h conj(dW) w_k Delta b`` with the
    linearised ``dW``.
    """
    hh = damped_impulse(base, sample_grid)
    hd = damped_impulse(perturb(base, d_alpha, d_omega), sample_grid)
    fh = project(hh, grid)
    da, dw = param_derivatives(base, sample_grid)
    dW = project(da, grid).coefficients * d_alpha + project(dw, grid).coefficients * d_omega
    mask = region.mask(fh.coefficients.shape)
    cross = np.real(fh.coefficients * np.conj(dW)) * fh.cell_weights()[:, None]
    predicted = 2.0 * float(np.sum(cross[mask]))
    exact = eci(project(hd, grid), region).value - eci(fh, region).value
    return predicted, exact


def sensitivity_ladder(base: ImpulseParams, d_alpha: float, d_omega: float,
                       grid: GridSpec, region: Region, sample_grid: SampleGrid,
                       start: float = 1.0, steps: int = 4) -> list[dict]:
    """Residuals of both first-order checks over ``start * 2**-j``,
    ``j = 0..steps-1``, followed by a ``scale = 0`` row.

    ``ratio_*`` is the previous residual divided by the current one; second
    order remainders make it approach 4.
    """
    rows = []
    prev = None
    for j in range(steps):
        s = start * 2.0**-j
        rc = coefficient_sensitivity(base, s * d_alpha, s * d_omega, grid, sample_grid).residual
        pe, ex = eci_first_order_variation(base, s * d_alpha, s * d_omega, grid, region,
                                           sample_grid)
        re = abs(ex - pe)
        row = {"scale": s, "delta_alpha": s * d_alpha, "delta_omega": s * d_omega,
               "residual_coeff": rc, "residual_eci": re,
               "eci_predicted": pe, "eci_exact": ex,
               "ratio_coeff": math.nan, "ratio_eci": math.nan}
        if prev is not None:
            row["ratio_coeff"] = prev[0] / rc if rc > 0 else math.nan
            row["ratio_eci"] = prev[1] / re if re > 0 else math.nan
        prev = (rc, re)
        rows.append(row)
    rc = coefficient_sensitivity(base, 0.0, 0.0, grid, sample_grid).residual
    pe, ex = eci_first_order_variation(base, 0.0, 0.0, grid, region, sample_grid)
    rows.append({"scale": 0.0, "delta_alpha": 0.0, "delta_omega": 0.0,
                 "residual_coeff": rc, "residual_eci": abs(ex - pe),
                 "eci_predicted": pe, "eci_exact": ex,
                 "ratio_coeff": math.nan, "ratio_eci": math.nan})
    return rows
