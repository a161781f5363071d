"""IMRED pipeline: training, scoring, thresholding and evaluation."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .dataset import LabeledDataset
from .energy import Region, eci
from .errors import (
    InsufficientSamples,
    InvalidBand,
    InvalidConfig,
    SingleClassInput,
)
from .separability import (
    AdmissibleFamily,
    ClassStats,
    _as_defective,
    class_stats,
    optimize_region,
)
from .signal_model import Signal, normalize
from .transform import Backend, CoefficientField, GridSpec, StftSpec, log_scales, project

log = logging.getLogger(__name__)

CRITERIA = ("youden", "accuracy", "auc_validation")


# -- ROC ----------------------------------------------------------------------


@dataclass(frozen=True)
class RocCurve:
    """Operating points of the rule ``defective iff z > threshold``.

    Thresholds run from the largest score (the ``(0, 0)`` point) down through
    every distinct score to ``-inf`` (the ``(1, 1)`` point).
    """

    fpr: np.ndarray = field(repr=False)
    tpr: np.ndarray = field(repr=False)
    thresholds: np.ndarray = field(repr=False)
    auc: float
    n_pos: int = 0
    n_neg: int = 0

    @property
    def points(self):
        return list(zip(self.fpr.tolist(), self.tpr.tolist(), self.thresholds.tolist()))


def _split(scores, labels):
    z = np.asarray(scores, dtype=float)
    is_d = _as_defective(labels)
    if z.shape != is_d.shape:
        raise InvalidConfig("scores and labels differ in length")
    if is_d.all() or not is_d.any():
        raise SingleClassInput("both classes must be present")
    return z, is_d


def roc_curve(scores, labels) -> RocCurve:
    z, is_d = _split(scores, labels)
    uniq = np.unique(z)[::-1]
    thresholds = np.concatenate((uniq, [-np.inf]))
    pos, neg = z[is_d], z[~is_d]
    tpr = (pos[None, :] > thresholds[:, None]).sum(axis=1) / pos.size
    fpr = (neg[None, :] > thresholds[:, None]).sum(axis=1) / neg.size
    auc = float(np.trapezoid(tpr, fpr))
    return RocCurve(fpr, tpr, thresholds, auc, int(pos.size), int(neg.size))


def _pair_matrix(pos: np.ndarray, neg: np.ndarray) -> np.ndarray:
    return (pos[:, None] > neg[None, :]) + 0.5 * (pos[:, None] == neg[None, :])


def mann_whitney_auc(scores, labels) -> float:
    """Fraction of (defective, healthy) pairs ranked correctly, ties as 1/2."""
    z, is_d = _split(scores, labels)
    return float(_pair_matrix(z[is_d], z[~is_d]).mean())


def bootstrap_auc_ci(scores, labels, n_boot: int = 2000, seed: int = 0,
                     level: float = 0.95) -> tuple[float, float]:
    """Stratified percentile bootstrap interval for the AUC.

    Each replicate resamples each class with replacement at its own size.
    Replicate AUCs come from multiplicity-weighted pair counts, which is
    exactly the Mann-Whitney AUC of the resampled scores.
    """
    if n_boot < 100:
        raise InvalidConfig("n_boot must be >= 100")
    z, is_d = _split(scores, labels)
    pos, neg = z[is_d], z[~is_d]
    g = _pair_matrix(pos, neg)
    rng = np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(3,)))
    cp = _multiplicities(rng, pos.size, n_boot)
    cn = _multiplicities(rng, neg.size, n_boot)
    aucs = np.einsum("bi,ij,bj->b", cp, g, cn) / (pos.size * neg.size)
    tail = 50.0 * (1.0 - level)
    lo, hi = np.percentile(aucs, [tail, 100.0 - tail])
    return float(lo), float(hi)


def _multiplicities(rng, n: int, n_boot: int) -> np.ndarray:
    draws = rng.integers(0, n, size=(n_boot, n))
    counts = np.zeros((n_boot, n))
    np.add.at(counts, (np.repeat(np.arange(n_boot), n), draws.ravel()), 1.0)
    return counts


def select_threshold(roc: RocCurve, criterion: str = "youden") -> float:
    """Pick ``tau`` from the curve.

    ``youden`` maximises TPR - FPR, ``accuracy`` the empirical accuracy and
    ``auc_validation`` the AUC of the single operating point,
    ``(1 + TPR - FPR) / 2``, which has the same maximiser as Youden.  Ties
    go to the larger threshold.  The returned value is the midpoint of the
    score gap the chosen operating point lives in, so classification
    reproduces that point.
    """
    if criterion not in CRITERIA:
        raise InvalidConfig(f"unknown threshold criterion {criterion!r}")
    thr = roc.thresholds
    if thr.size == 1:
        return float(thr[0])
    if criterion == "accuracy":
        n = roc.n_pos + roc.n_neg
        objective = (roc.tpr * roc.n_pos + (1.0 - roc.fpr) * roc.n_neg) / n
    else:
        objective = roc.tpr - roc.fpr
    i = int(np.flatnonzero(objective == objective.max())[0])
    if i == 0:
        return float(thr[0])
    upper = thr[i - 1]
    if np.isneginf(thr[i]):
        lowest = thr[i - 1]
        return float(lowest - max(thr[0] - lowest, 1.0))
    return float(0.5 * (thr[i] + upper))


# -- model --------------------------------------------------------------------


@dataclass(frozen=True)
class FamilySpec:
    """Admissible-family parameters, bound to a grid shape at training time."""

    generator: str = "rect_grid"
    widths: tuple = (1, 2, 4, 8, 16)
    scale_step: int = 8
    time_step: int = 4
    scale_extent: tuple = (8, 32)
    time_extent: tuple = (4, 32)

    def bind(self, shape) -> AdmissibleFamily:
        return AdmissibleFamily(self.generator, tuple(shape), self.widths, self.scale_step,
                                self.time_step, self.scale_extent, self.time_extent)


@dataclass(frozen=True)
class DetectorConfig:
    """Everything ``train`` needs besides the data.

    For the wavelet backend ``scale_range = (a_min, a_max, count)`` gives
    log-spaced scales in samples and ``translation_step`` the column spacing.
    The STFT backend uses every one-sided bin and the frame hop.
    """

    backend: Backend = StftSpec()
    scale_range: tuple = (2.0, 64.0, 32)
    translation_step: int = 64
    family: FamilySpec = FamilySpec()
    criterion: str = "youden"
    seed: int = 0
    fingerprint: str = ""

    def grid(self, n_samples: int) -> GridSpec:
        if isinstance(self.backend, StftSpec):
            return GridSpec.stft(self.backend, n_samples)
        a0, a1, num = self.scale_range
        return GridSpec.wavelet(self.backend, n_samples, log_scales(a0, a1, int(num)),
                                self.translation_step)


@dataclass(frozen=True)
class DetectorModel:
    grid: GridSpec
    region: Region
    tau: float
    stats_h: ClassStats
    stats_d: ClassStats
    j_star: float = math.nan
    seed: int = 0
    fingerprint: str = ""

    def __post_init__(self):
        if not math.isfinite(self.tau) and self.tau != math.inf:
            raise InvalidConfig("tau must be finite (or the +inf sentinel)")
        self.region.check(self.grid.shape)


def _normalized_field(x: Signal, grid: GridSpec) -> CoefficientField:
    return project(normalize(x), grid)


def _usable(data: LabeledDataset) -> list[int]:
    keep = []
    for i, it in enumerate(data):
        if it.signal.energy() == 0.0:
            log.warning("excluding %s: the signal contains no energy", it.id)
            continue
        keep.append(i)
    return keep


def _fit(fields: Sequence[CoefficientField], labels: Sequence[str], grid: GridSpec,
         config: DetectorConfig) -> DetectorModel:
    is_d = _as_defective(labels)
    if is_d.sum() < 2 or (~is_d).sum() < 2:
        raise InsufficientSamples("training needs at least 2 items per class")
    region, j_star = optimize_region(fields, labels, config.family.bind(grid.shape),
                                     require_increase=True)
    z = np.array([eci(f, region).value for f in fields])
    tau = select_threshold(roc_curve(z, is_d), config.criterion)
    return DetectorModel(grid, region, tau, class_stats(z[~is_d]), class_stats(z[is_d]),
                         j_star, config.seed, config.fingerprint)


def train(data: LabeledDataset, config: DetectorConfig = DetectorConfig()) -> DetectorModel:
    """Normalize, project, search the region family for max J, fit ``tau``.

    Only regions where the defective mean ECI exceeds the healthy one are
    eligible, matching the rule ``defective iff z > tau``.  Zero-energy items
    are logged and dropped.
    """
    keep = _usable(data)
    if not keep:
        raise InsufficientSamples("no usable signals")
    sub = data.subset(keep)
    grid = config.grid(len(sub.items[0].signal))
    fields = [_normalized_field(s, grid) for s in sub.signals]
    return _fit(fields, sub.labels, grid, config)


def score(model: DetectorModel, x: Signal) -> float:
    return eci(_normalized_field(x, model.grid), model.region).value


def classify(model: DetectorModel, x: Signal) -> str:
    return classify_score(score(model, x), model.tau)


def classify_score(z: float, tau: float) -> str:
    return "defective" if z > tau else "healthy"


# -- evaluation ---------------------------------------------------------------


@dataclass
class FoldResult:
    fold: int
    auc: float
    accuracy: float
    sensitivity: float
    specificity: float
    tau: float
    train_ids: list = field(default_factory=list)
    eval_ids: list = field(default_factory=list)
    region: Optional[Region] = None
    j_star: float = math.nan


@dataclass
class EvalReport:
    auc: float
    auc_ci: tuple
    accuracy: float
    sensitivity: float
    specificity: float
    tau: float
    folds: list = field(default_factory=list)
    scores: np.ndarray = field(default=None, repr=False)
    labels: list = field(default=None, repr=False)
    roc: Optional[RocCurve] = field(default=None, repr=False)
    name: str = "imred"
    raw_scores: np.ndarray = field(default=None, repr=False)


def confusion_rates(is_d: np.ndarray, predicted_d: np.ndarray) -> tuple[float, float, float]:
    """Accuracy, sensitivity (defective recall), specificity (healthy recall)."""
    acc = float(np.mean(is_d == predicted_d))
    sens = float(np.mean(predicted_d[is_d])) if is_d.any() else math.nan
    spec = float(np.mean(~predicted_d[~is_d])) if (~is_d).any() else math.nan
    return acc, sens, spec


def _safe_auc(z, is_d) -> float:
    if is_d.all() or not is_d.any():
        return math.nan
    return roc_curve(z, is_d).auc


def report_from_scores(z, is_d, taus, n_boot: int, seed: int, folds=(), name="imred",
                       labels=None) -> EvalReport:
    """Pool per-item scores and per-item thresholds into a report.

    With a single threshold the ROC is built on the scores themselves.  With
    per-item (per-fold) thresholds it is built on the decision margins
    ``z - tau``: each fold picks its own region, so raw scores from different
    folds are not on a common scale, while margins share the decision point 0.
    """
    z = np.asarray(z, dtype=float)
    is_d = np.asarray(is_d, dtype=bool)
    taus = np.broadcast_to(np.asarray(taus, dtype=float), z.shape)
    pred = z > taus
    acc, sens, spec = confusion_rates(is_d, pred)
    pooled = z - taus if folds else z
    roc = roc_curve(pooled, is_d)
    ci = bootstrap_auc_ci(pooled, is_d, n_boot, seed)
    tau = float(np.mean([f.tau for f in folds])) if folds else float(taus[0])
    if labels is None:
        labels = ["defective" if d else "healthy" for d in is_d]
    return EvalReport(roc.auc, ci, acc, sens, spec, tau, list(folds), pooled, labels, roc,
                      name, z)


def evaluate(model: DetectorModel, data: LabeledDataset, n_boot: int = 2000,
             seed: int = 0) -> EvalReport:
    keep = _usable(data)
    sub = data.subset(keep)
    z = np.array([score(model, s) for s in sub.signals])
    return report_from_scores(z, sub.is_defective(), model.tau, n_boot, seed,
                              labels=sub.labels)


def stratified_folds(labels, k: int, seed: int) -> np.ndarray:
    """Fold index per item: each class is shuffled with its own seeded stream
    and dealt round-robin, so class counts per fold differ by at most one."""
    if k < 2:
        raise InvalidConfig("K must be >= 2")
    is_d = _as_defective(labels)
    fold = np.empty(is_d.size, dtype=int)
    for cls in (0, 1):
        idx = np.flatnonzero(is_d == bool(cls))
        rng = np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(2, cls)))
        perm = idx[rng.permutation(idx.size)]
        fold[perm] = np.arange(perm.size) % k
    return fold


def cross_validate(data: LabeledDataset, k: int = 10,
                   config: DetectorConfig = DetectorConfig(), seed: int = 0,
                   n_boot: int = 2000, baselines: dict | None = None):
    """Stratified K-fold evaluation.

    Region search and threshold selection run on the training folds only;
    every fold's training ids are checked disjoint from its evaluation ids.
    ``baselines`` maps a name to precomputed per-item scores; those get the
    same folds; their orientation (see :func:`orientation`) and threshold are
    fitted on the training folds.  Returns the
    IMRED report, or ``(report, {name: report})`` when baselines are given.
    """
    keep = _usable(data)
    sub = data.subset(keep)
    sub.require_both_classes(2)
    is_d = sub.is_defective()
    if min(is_d.sum(), (~is_d).sum()) < k:
        log.warning("fewer than K=%d items in a class; folds are unbalanced", k)
    fold_of = stratified_folds(sub.labels, k, seed)
    grid = config.grid(len(sub.items[0].signal))
    fields = [_normalized_field(s, grid) for s in sub.signals]
    ids = np.array(sub.ids)
    labels = np.array(sub.labels)

    z = np.empty(len(sub))
    item_tau = np.empty(len(sub))
    folds = []
    for f in range(k):
        test = np.flatnonzero(fold_of == f)
        train_idx = np.flatnonzero(fold_of != f)
        if test.size == 0:
            continue
        if set(ids[train_idx]) & set(ids[test]):
            raise RuntimeError(f"fold {f} leaks evaluation ids into training")
        model = _fit([fields[i] for i in train_idx], labels[train_idx].tolist(), grid, config)
        zt = np.array([eci(fields[i], model.region).value for i in test])
        z[test] = zt
        item_tau[test] = model.tau
        acc, sens, spec = confusion_rates(is_d[test], zt > model.tau)
        folds.append(FoldResult(f, _safe_auc(zt, is_d[test]), acc, sens, spec, model.tau,
                                ids[train_idx].tolist(), ids[test].tolist(),
                                model.region, model.j_star))
    report = report_from_scores(z, is_d, item_tau, n_boot, seed, folds, labels=sub.labels)
    if baselines is None:
        return report
    extra = {}
    for name, raw in baselines.items():
        bz = np.asarray(raw, dtype=float)[keep]
        btau = np.empty(len(sub))
        signed = np.empty(len(sub))
        bfolds = []
        for f in range(k):
            test = np.flatnonzero(fold_of == f)
            if test.size == 0:
                continue
            tr = fold_of != f
            sign = orientation(bz[tr], is_d[tr])
            tau = select_threshold(roc_curve(sign * bz[tr], is_d[tr]), config.criterion)
            signed[test] = sign * bz[test]
            btau[test] = tau
            acc, sens, spec = confusion_rates(is_d[test], signed[test] > tau)
            bfolds.append(FoldResult(f, _safe_auc(signed[test], is_d[test]), acc, sens, spec,
                                     tau, ids[tr].tolist(), ids[test].tolist()))
        extra[name] = report_from_scores(signed, is_d, btau, n_boot, seed, bfolds, name=name,
                                         labels=sub.labels)
    return report, extra


# -- baselines ----------------------------------------------------------------


def orientation(z, is_d) -> float:
    """+1 if the defective mean score is at least the healthy one, else -1.

    Baseline features carry no built-in direction; flipping them lets the
    same ``z > tau`` rule apply.
    """
    z = np.asarray(z, dtype=float)
    is_d = np.asarray(is_d, dtype=bool)
    return 1.0 if z[is_d].mean() >= z[~is_d].mean() else -1.0


def baseline_fourier_energy(x: Signal, band) -> float:
    """Fraction of the one-sided DFT energy of the normalized signal that lies
    in ``[f_lo, f_hi]`` Hz."""
    f_lo, f_hi = map(float, band)
    fs = x.sample_rate
    if not (0.0 <= f_lo < f_hi <= fs / 2.0):
        raise InvalidBand(f"need 0 <= f_lo < f_hi <= fs/2, got [{f_lo}, {f_hi}]")
    xn = normalize(x).samples
    n = xn.size
    power = np.abs(np.fft.rfft(xn)) ** 2
    power[1:(n + 1) // 2] *= 2.0  # fold negative frequencies; DC and Nyquist once
    freqs = np.fft.rfftfreq(n, 1.0 / fs)
    inside = (freqs >= f_lo) & (freqs <= f_hi)
    return float(power[inside].sum() / power.sum())


def baseline_wavelet_band(x: Signal, grid: GridSpec, fixed_band: Region) -> float:
    """ECI of the normalized signal over a fixed, non-optimized band."""
    return eci(_normalized_field(x, grid), fixed_band).value

