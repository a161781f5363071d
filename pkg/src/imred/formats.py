"""Text file formats: model files, CSV tables and PGM energy maps.

Every writer takes the config fingerprint and root seed and records them in
``#`` comment lines at the top, so each artifact can be traced back to the
run that produced it.  Floats are written with ``repr`` (shortest exact
round-trip) except for the model statistics, which use 17 significant
digits.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .detector import DetectorModel, EvalReport, RocCurve
from .energy import Region
from .errors import InvalidConfig, IOFailure
from .separability import ClassStats
from .transform import EnergyMap, GridSpec, StftSpec, WaveletSpec

FORMAT_VERSION = 1


def _header(fingerprint: str, seed: int) -> list[str]:
    return [f"# config_fingerprint = {fingerprint}", f"# seed = {seed}"]


def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def write_text(path, text: str) -> None:
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise IOFailure(f"cannot write {path}: {exc}") from exc


def read_text(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IOFailure(f"cannot read {path}: {exc}") from exc


# -- generic CSV tables --------------------------------------------------------


def table_to_text(columns, rows, fingerprint: str, seed: int) -> str:
    lines = _header(fingerprint, seed)
    lines.append(",".join(columns))
    lines += [",".join(_cell(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def table_from_text(text: str):
    """Return ``(meta, columns, rows)``; cells stay strings so that writing
    them back reproduces the input byte for byte."""
    meta = {}
    body = []
    for ln in text.splitlines():
        if ln.startswith("#"):
            key, _, val = ln[1:].partition("=")
            meta[key.strip()] = val.strip()
        elif ln:
            body.append(ln.split(","))
    if not body:
        raise InvalidConfig("table has no header row")
    return meta, body[0], body[1:]


# -- model file ---------------------------------------------------------------


def _g17(x: float) -> str:
    return format(float(x), ".17g")


def model_to_text(model: DetectorModel) -> str:
    grid = model.grid
    spec = grid.backend
    trans = grid.translations
    step = trans[1] - trans[0] if len(trans) > 1 else 1
    kv = [("format_version", str(FORMAT_VERSION))]
    if grid.is_stft:
        kv += [("backend", "stft"), ("window", spec.window),
               ("window_length", str(spec.window_length)), ("hop", str(spec.hop)),
               ("scales", ",".join(str(int(a)) for a in grid.scales))]
    else:
        # wavelets have no window; the hop is the translation step
        kv += [("backend", "wavelet"), ("wavelet_center", repr(spec.center_frequency)),
               ("window_length", "0"), ("hop", str(step)),
               ("scales", ",".join(repr(a) for a in grid.scales))]
    kv += [
        ("n_samples", str(grid.n_samples)),
        ("translation_start", str(trans[0])),
        ("translation_count", str(len(trans))),
        ("region", model.region.to_inline()),
        ("tau", _g17(model.tau)),
        ("mu_h", _g17(model.stats_h.mean)), ("var_h", _g17(model.stats_h.variance)),
        ("n_h", str(model.stats_h.count)),
        ("mu_d", _g17(model.stats_d.mean)), ("var_d", _g17(model.stats_d.variance)),
        ("n_d", str(model.stats_d.count)),
        ("j_star", _g17(model.j_star)),
        ("seed", str(model.seed)),
        ("config_fingerprint", model.fingerprint),
    ]
    return "".join(f"{k} = {v}\n" for k, v in kv)


REQUIRED_MODEL_KEYS = ("format_version", "backend", "window_length", "hop", "scales",
                       "region", "tau", "mu_h", "var_h", "mu_d", "var_d", "seed",
                       "config_fingerprint")


def model_from_text(text: str) -> DetectorModel:
    kv = {}
    for ln in text.splitlines():
        if not ln.strip() or ln.startswith("#"):
            continue
        key, sep, val = ln.partition("=")
        if not sep:
            raise InvalidConfig(f"bad model line {ln!r}")
        kv[key.strip()] = val.strip()
    missing = [k for k in REQUIRED_MODEL_KEYS if k not in kv]
    if missing:
        raise InvalidConfig(f"model file lacks keys {missing}")
    if int(kv["format_version"]) != FORMAT_VERSION:
        raise InvalidConfig(f"unsupported model format_version {kv['format_version']}")
    hop = int(kv["hop"])
    n = int(kv["n_samples"])
    start = int(kv["translation_start"])
    trans = tuple(start + hop * i for i in range(int(kv["translation_count"])))
    if kv["backend"] == "stft":
        spec = StftSpec(kv["window"], int(kv["window_length"]), hop)
        scales = tuple(int(v) for v in kv["scales"].split(","))
    elif kv["backend"] == "wavelet":
        spec = WaveletSpec(float(kv["wavelet_center"]))
        scales = tuple(float(v) for v in kv["scales"].split(","))
    else:
        raise InvalidConfig(f"unknown backend {kv['backend']!r}")
    grid = GridSpec(spec, scales, trans, n)
    return DetectorModel(
        grid=grid,
        region=Region.from_inline(kv["region"]),
        tau=float(kv["tau"]),
        stats_h=ClassStats(float(kv["mu_h"]), float(kv["var_h"]), int(kv.get("n_h", 0))),
        stats_d=ClassStats(float(kv["mu_d"]), float(kv["var_d"]), int(kv.get("n_d", 0))),
        j_star=float(kv.get("j_star", "nan")),
        seed=int(kv["seed"]),
        fingerprint=kv["config_fingerprint"],
    )


def write_model(path, model: DetectorModel) -> None:
    write_text(path, model_to_text(model))


def read_model(path) -> DetectorModel:
    return model_from_text(read_text(path))


# -- energy maps --------------------------------------------------------------


def _row_labels(grid: GridSpec, fs: float):
    """Frequency in Hz for STFT rows, scale in samples for wavelet rows."""
    return grid.row_frequencies(fs) if grid.is_stft else grid.scale_array


def energy_map_csv(emap: EnergyMap, fs: float, fingerprint: str, seed: int) -> str:
    times = emap.grid.column_centres() / fs
    columns = ["scale_or_freq"] + [_cell(float(t)) for t in times]
    rows = [[float(lab)] + [float(v) for v in row]
            for lab, row in zip(_row_labels(emap.grid, fs), emap.density)]
    return table_to_text(columns, rows, fingerprint, seed)


def pgm_levels(density: np.ndarray) -> np.ndarray:
    """Linear min-max map to 0..255 (all zeros for a constant map)."""
    d = np.asarray(density, dtype=float)
    lo, hi = float(d.min()), float(d.max())
    if hi == lo:
        return np.zeros(d.shape, dtype=int)
    return np.rint(255.0 * (d - lo) / (hi - lo)).astype(int)


def energy_map_pgm(emap: EnergyMap, fingerprint: str, seed: int) -> str:
    """P2 graymap; image row ``i`` is CSV data row ``i`` (scale order)."""
    lv = pgm_levels(emap.density)
    m, b = lv.shape
    lines = ["P2"] + _header(fingerprint, seed) + [f"{b} {m}", "255"]
    lines += [" ".join(str(v) for v in row) for row in lv]
    return "\n".join(lines) + "\n"


def read_pgm(text: str) -> np.ndarray:
    words = [w for ln in text.splitlines() if not ln.startswith("#") for w in ln.split()]
    if not words or words[0] != "P2":
        raise InvalidConfig("not a P2 graymap")
    b, m = int(words[1]), int(words[2])
    return np.array([int(w) for w in words[4:4 + b * m]]).reshape(m, b)


# -- evaluation outputs -------------------------------------------------------

REPORT_COLUMNS = ("fold", "auc", "accuracy", "sensitivity", "specificity", "tau")


def _report_row(name, rep) -> list:
    return [name, float(rep.auc), float(rep.accuracy), float(rep.sensitivity),
            float(rep.specificity), float(rep.tau)]


def report_csv(report: EvalReport, fingerprint: str, seed: int,
               baselines: dict | None = None) -> str:
    """One row per fold, a ``pooled`` row, then ``baseline_<name>`` rows."""
    rows = [_report_row(f.fold, f) for f in report.folds]
    rows.append(_report_row("pooled", report))
    for name, rep in (baselines or {}).items():
        rows.append(_report_row(f"baseline_{name}", rep))
    text = table_to_text(REPORT_COLUMNS, rows, fingerprint, seed)
    lo, hi = report.auc_ci
    ci = f"# pooled_auc_ci95 = {_cell(float(lo))},{_cell(float(hi))}\n"
    return ci + text


def roc_csv(roc: RocCurve, fingerprint: str, seed: int) -> str:
    rows = [[float(t), float(f), float(p)]
            for f, p, t in zip(roc.fpr, roc.tpr, roc.thresholds)]
    return table_to_text(("threshold", "fpr", "tpr"), rows, fingerprint, seed)


SENSITIVITY_COLUMNS = ("scale", "delta_alpha", "delta_omega", "residual_coeff",
                       "residual_eci", "ratio_coeff", "ratio_eci", "eci_predicted",
                       "eci_exact")


def sensitivity_csv(rows: list[dict], fingerprint: str, seed: int) -> str:
    body = [[float(r[c]) for c in SENSITIVITY_COLUMNS] for r in rows]
    return table_to_text(SENSITIVITY_COLUMNS, body, fingerprint, seed)


def j_table_csv(rects: np.ndarray, j: np.ndarray, fingerprint: str, seed: int) -> str:
    rows = [[i, *map(int, r), float(v)] for i, (r, v) in enumerate(zip(rects.tolist(), j))]
    cols = ("region_id", "scale_lo", "scale_hi", "time_lo", "time_hi", "J")
    return table_to_text(cols, rows, fingerprint, seed)

