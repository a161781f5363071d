"""Command-line entry point: ``imred {synth,transform,train,eval,sensitivity}``.

Each verb reads its inputs, runs one pipeline stage and writes text outputs
into ``--out`` (default: the current directory).  On failure the last line on
stderr is ``error_class=<slug> message=<text>`` and the exit status is 2.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import formats
from .config import RunConfig
from .dataset import LabeledDataset, read_dataset, write_dataset
from .detector import (
    baseline_fourier_energy,
    baseline_wavelet_band,
    cross_validate,
    evaluate,
    orientation,
    report_from_scores,
    roc_curve,
    select_threshold,
    train,
)
from .errors import ImredError, InvalidConfig, IOFailure, ZeroEnergySignal
from .energy import eci
from .separability import fisher_j_scores, j_table
from .signal_model import normalize
from .synthetic import generate_dataset, sensitivity_ladder
from .transform import energy_density, project

log = logging.getLogger("imred")


def _out_dir(args) -> Path:
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IOFailure(f"cannot create output directory {out}: {exc}") from exc
    return out


def _say(args, msg: str) -> None:
    if not args.quiet:
        print(msg)


def load_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            raise InvalidConfig("--seed must be an unsigned 64-bit integer")
        cfg = cfg.replace(seed=args.seed)
    return cfg


# -- verbs --------------------------------------------------------------------


def cmd_synth(args, cfg: RunConfig) -> list[Path]:
    data = generate_dataset(cfg.synthetic())
    path = _out_dir(args) / "dataset.csv"
    write_dataset(path, data, cfg.fingerprint(), cfg.seed)
    counts = data.counts()
    for label in ("healthy", "defective"):
        e = [it.signal.energy() for it in data if it.label == label]
        _say(args, f"{label}: n={counts[label]} mean_energy={np.mean(e):.6g}")
    _say(args, f"wrote {path}")
    return [path]


def cmd_transform(args, cfg: RunConfig) -> list[Path]:
    data = read_dataset(args.dataset)
    items = [it for it in data if not args.id or it.id in args.id]
    if args.id and len(items) != len(set(args.id)):
        raise InvalidConfig(f"unknown ids {sorted(set(args.id) - set(data.ids))}")
    out = _out_dir(args)
    fp, seed = cfg.fingerprint(), cfg.seed
    written = []
    for it in items:
        if it.signal.energy() == 0.0:
            raise ZeroEnergySignal(f"signal {it.id} contains no energy")
        grid = cfg.grid(len(it.signal))
        emap = energy_density(project(it.signal, grid))
        fs = it.signal.sample_rate
        csv_path = out / f"{it.id}_energy.csv"
        pgm_path = out / f"{it.id}_energy.pgm"
        formats.write_text(csv_path, formats.energy_map_csv(emap, fs, fp, seed))
        formats.write_text(pgm_path, formats.energy_map_pgm(emap, fp, seed))
        written += [csv_path, pgm_path]
    _say(args, f"wrote {len(written)} files for {len(items)} signal(s) into {out}")
    return written


def cmd_train(args, cfg: RunConfig) -> list[Path]:
    data = read_dataset(args.dataset)
    det = cfg.detector()
    model = train(data, det)
    out = _out_dir(args)
    model_path = out / "model.txt"
    formats.write_model(model_path, model)
    usable = LabeledDataset(tuple(it for it in data if it.signal.energy() > 0))
    fields = [project(normalize(s), model.grid) for s in usable.signals]
    rects, j = j_table(fields, usable.labels, det.family.bind(model.grid.shape),
                       require_increase=True)
    j_path = out / "jtable.csv"
    formats.write_text(j_path, formats.j_table_csv(rects, j, model.fingerprint, model.seed))
    _say(args, f"J(region*) = {model.j_star:.6g}  region = {model.region.to_inline()}")
    band = cfg.baseline_band(model.grid, usable.items[0].signal.sample_rate)
    j_band = fisher_j_scores(*_class_scores(fields, usable.is_defective(), band))
    _say(args, f"J(fixed band) = {j_band:.6g}  ratio = {model.j_star / j_band:.6g}"
         if j_band > 0 else f"J(fixed band) = {j_band:.6g}")
    _say(args, f"tau = {model.tau:.6g}")
    _say(args, f"healthy: mean={model.stats_h.mean:.6g} var={model.stats_h.variance:.6g}")
    _say(args, f"defective: mean={model.stats_d.mean:.6g} var={model.stats_d.variance:.6g}")
    _say(args, f"wrote {model_path} and {j_path}")
    return [model_path, j_path]


def _class_scores(fields, is_d, region):
    z = np.array([eci(f, region).value for f in fields])
    return z[~is_d], z[is_d]


def baseline_scores(data: LabeledDataset, cfg: RunConfig) -> dict:
    """Raw per-item scores of the Fourier-band and fixed-band baselines."""
    fs = data.items[0].signal.sample_rate
    grid = cfg.grid(len(data.items[0].signal))
    band = cfg.baseline_band(grid, fs)
    band_hz = cfg["baseline.fourier_band_hz"]
    fourier, wave = [], []
    for s in data.signals:
        if s.energy() == 0.0:
            fourier.append(np.nan)
            wave.append(np.nan)
            continue
        fourier.append(baseline_fourier_energy(s, band_hz))
        wave.append(baseline_wavelet_band(s, grid, band))
    return {"fourier": np.array(fourier), "waveletband": np.array(wave)}


def _in_sample_baselines(raw: dict, data: LabeledDataset, cfg: RunConfig) -> dict:
    keep = np.array([s.energy() > 0 for s in data.signals])
    is_d = data.is_defective()[keep]
    out = {}
    for name, z in raw.items():
        z = z[keep]
        signed = orientation(z, is_d) * z
        tau = select_threshold(roc_curve(signed, is_d), cfg["detector.criterion"])
        out[name] = report_from_scores(signed, is_d, tau, cfg["eval.n_boot"], cfg.seed,
                                       name=name)
    return out


def cmd_eval(args, cfg: RunConfig) -> list[Path]:
    data = read_dataset(args.dataset)
    raw = baseline_scores(data, cfg) if args.baselines else None
    n_boot = cfg["eval.n_boot"]
    if args.model and args.cv is None:
        model = formats.read_model(args.model)
        report = evaluate(model, data, n_boot, cfg.seed)
        extra = _in_sample_baselines(raw, data, cfg) if raw is not None else None
    else:
        k = args.cv if args.cv is not None else cfg["eval.k"]
        res = cross_validate(data, k, cfg.detector(), cfg.seed, n_boot, raw)
        report, extra = res if raw is not None else (res, None)
    out = _out_dir(args)
    fp = cfg.fingerprint()
    rep_path, roc_path = out / "report.csv", out / "roc.csv"
    formats.write_text(rep_path, formats.report_csv(report, fp, cfg.seed, extra))
    formats.write_text(roc_path, formats.roc_csv(report.roc, fp, cfg.seed))
    lo, hi = report.auc_ci
    _say(args, f"AUC = {report.auc:.4f} (95% CI {lo:.4f}-{hi:.4f}) "
               f"accuracy = {report.accuracy:.4f}")
    for name, rep in (extra or {}).items():
        _say(args, f"baseline {name}: AUC = {rep.auc:.4f}")
    _say(args, f"wrote {rep_path} and {roc_path}")
    return [rep_path, roc_path]


def cmd_sensitivity(args, cfg: RunConfig) -> list[Path]:
    sg = cfg.sample_grid()
    grid = cfg.grid(sg.num_samples)
    syn = cfg.synthetic()
    rows = sensitivity_ladder(syn.base, syn.d_alpha, syn.d_omega, grid,
                              cfg.sensitivity_region(grid), sg,
                              cfg["sensitivity.start"], cfg["sensitivity.steps"])
    path = _out_dir(args) / "sensitivity.csv"
    formats.write_text(path, formats.sensitivity_csv(rows, cfg.fingerprint(), cfg.seed))
    for r in rows:
        _say(args, f"scale={r['scale']:.6g} residual_coeff={r['residual_coeff']:.4g} "
                   f"residual_eci={r['residual_eci']:.4g} ratio_coeff={r['ratio_coeff']:.3f} "
                   f"ratio_eci={r['ratio_eci']:.3f}")
    _say(args, f"wrote {path}")
    return [path]


COMMANDS = {
    "synth": cmd_synth,
    "transform": cmd_transform,
    "train": cmd_train,
    "eval": cmd_eval,
    "sensitivity": cmd_sensitivity,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="flat 'key = value' config file")
    common.add_argument("--seed", type=int, metavar="U64", help="overrides the config seed")
    common.add_argument("--out", metavar="DIR", default=".", help="output directory")
    common.add_argument("--quiet", action="store_true", help="suppress the summary")

    parser = argparse.ArgumentParser(prog="imred", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("synth", parents=[common], help="generate a synthetic dataset")
    p = sub.add_parser("transform", parents=[common], help="export energy maps")
    p.add_argument("dataset")
    p.add_argument("--id", action="append", help="only this signal id (repeatable)")
    p = sub.add_parser("train", parents=[common], help="fit region and threshold")
    p.add_argument("dataset")
    p = sub.add_parser("eval", parents=[common], help="evaluate a model or run CV")
    p.add_argument("dataset")
    p.add_argument("--model", metavar="PATH", help="model file to evaluate")
    p.add_argument("--cv", type=int, metavar="K", help="run stratified K-fold CV")
    p.add_argument("--baselines", action="store_true", help="add baseline rows")
    sub.add_parser("sensitivity", parents=[common], help="first-order sensitivity ladder")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args)
        COMMANDS[args.command](args, cfg)
    except ImredError as exc:
        msg = " ".join(str(exc).split())
        print(f"error_class={exc.error_class} message={msg}", file=sys.stderr)
        return 2
    except OSError as exc:
        msg = " ".join(str(exc).split())
        print(f"error_class=io-error message={msg}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
