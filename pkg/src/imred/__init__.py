"""Impulse-based multi-resolution energy detector (IMRED).

Damped impulse-response modelling, time-frequency projection, localized
energy concentration, Fisher-type region selection and threshold detection.
"""

from .errors import ImredError
from .signal_model import (
    ImpulseParams,
    NoiseSpec,
    SampleGrid,
    Signal,
    add_noise,
    damped_impulse,
    l2_norm,
    normalize,
    perturb,
    resonance_frequency,
)
from .transform import (
    CoefficientField,
    EnergyMap,
    GridSpec,
    StftSpec,
    WaveletSpec,
    admissibility_constant,
    energy_density,
    estimate_frame_bounds,
    project,
    project_direct,
    total_transform_energy,
)
from .energy import EciValue, Region, concentration_ratio, eci, eci_stability_gap
from .separability import (
    AdmissibleFamily,
    ClassStats,
    class_stats,
    fisher_j,
    optimize_region,
    welch_t_test,
)

__version__ = "0.1.0"
from .dataset import LabeledDataset, LabeledItem, read_dataset, write_dataset
from .detector import (
    DetectorConfig,
    DetectorModel,
    EvalReport,
    FamilySpec,
    RocCurve,
    baseline_fourier_energy,
    baseline_wavelet_band,
    bootstrap_auc_ci,
    classify,
    cross_validate,
    evaluate,
    roc_curve,
    score,
    select_threshold,
    train,
)
from .synthetic import (
    SyntheticConfig,
    coefficient_sensitivity,
    eci_first_order_variation,
    generate_dataset,
    param_derivatives,
    sensitivity_ladder,
)
from .config import RunConfig
