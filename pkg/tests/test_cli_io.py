import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from imred import formats
from imred.cli import main
from imred.config import RunConfig
from imred.dataset import LabeledDataset, LabeledItem, dataset_from_text, dataset_to_text
from imred.errors import InvalidConfig
from imred.signal_model import Signal

FAST = "eval.n_boot = 200\n"


@pytest.fixture(scope="module")
def work(tmp_path_factory):
    d = tmp_path_factory.mktemp("run")
    cfg = d / "run.cfg"
    cfg.write_text(FAST)
    assert main(["synth", "--config", str(cfg), "--out", str(d / "a"), "--quiet"]) == 0
    return d, cfg


def run(*argv):
    return main([str(a) for a in argv])


def header(path):
    lines = [ln for ln in path.read_text().splitlines() if ln.startswith("#")]
    return {ln[1:].split("=")[0].strip(): ln.split("=", 1)[1].strip() for ln in lines}


# -- config ---------------------------------------------------------------------


def test_config_round_trip_and_fingerprint():
    cfg = RunConfig()
    again = RunConfig.from_text(cfg.to_text())
    assert again.to_text() == cfg.to_text()
    assert again.fingerprint() == cfg.fingerprint()
    assert len(cfg.fingerprint()) == 16 and int(cfg.fingerprint(), 16) >= 0
    assert cfg.replace(seed=1).fingerprint() != cfg.fingerprint()


def test_config_rejects_unknown_key():
    with pytest.raises(InvalidConfig):
        RunConfig.from_text("transform.nonsense = 3\n")
    with pytest.raises(InvalidConfig):
        RunConfig.from_text("eval.k = many\n")


def test_config_parses_sections():
    cfg = RunConfig.from_text("# comment\ntransform.window_length = 128\n"
                              "family.widths = 1,3\nsynth.snr_db = inf\n")
    assert cfg["transform.window_length"] == 128
    assert cfg["family.widths"] == (1, 3)
    assert cfg["synth.snr_db"] == math.inf


# -- synth ----------------------------------------------------------------------


def test_synth_file(work):
    d, _ = work
    text = (d / "a" / "dataset.csv").read_text()
    data = dataset_from_text(text)
    assert len(data) == 40
    assert header(d / "a" / "dataset.csv")["seed"] == "20241018"
    assert dataset_to_text(data, *_meta(d / "a" / "dataset.csv")) == text


def _meta(path):
    h = header(path)
    return h["config_fingerprint"], int(h["seed"])


def test_synth_byte_identical(work, tmp_path):
    d, cfg = work
    assert run("synth", "--config", cfg, "--out", tmp_path, "--quiet") == 0
    assert (tmp_path / "dataset.csv").read_bytes() == (d / "a" / "dataset.csv").read_bytes()


def test_synth_seed_override(work, tmp_path):
    d, cfg = work
    assert run("synth", "--config", cfg, "--seed", 7, "--out", tmp_path, "--quiet") == 0
    assert header(tmp_path / "dataset.csv")["seed"] == "7"
    assert (tmp_path / "dataset.csv").read_bytes() != (d / "a" / "dataset.csv").read_bytes()


def test_unwritable_path(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert run("synth", "--out", blocker / "sub", "--quiet") != 0
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1
    assert err[0].startswith("error_class=io-error")
    assert str(blocker) in err[0]


def test_bad_config_exit(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("nope = 1\n")
    assert run("synth", "--config", bad, "--out", tmp_path) == 2
    assert "error_class=invalid-config" in capsys.readouterr().err


# -- dataset format -------------------------------------------------------------


@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False),
                min_size=1, max_size=20))
def test_dataset_round_trip(values):
    sig = Signal.from_array(values, 1234.5)
    data = LabeledDataset((LabeledItem(sig, "healthy", "a"), LabeledItem(sig, "defective", "b")))
    text = dataset_to_text(data, "abc", 3)
    back = dataset_from_text(text)
    assert np.array_equal(back.items[0].signal.samples, sig.samples)
    assert dataset_to_text(back, "abc", 3) == text


# -- transform ------------------------------------------------------------------


def test_transform_outputs(tmp_path):
    # nominal healthy response: no per-sample jitter, so the resonance sits at f0
    cfg = tmp_path / "nominal.cfg"
    cfg.write_text("synth.jitter = 0.0\nsynth.n_healthy = 1\nsynth.n_defective = 1\n")
    assert run("synth", "--config", cfg, "--out", tmp_path, "--quiet") == 0
    assert run("transform", tmp_path / "dataset.csv", "--id", "h000", "--config", cfg,
               "--out", tmp_path, "--quiet") == 0
    meta, cols, rows = formats.table_from_text((tmp_path / "h000_energy.csv").read_text())
    assert cols[0] == "scale_or_freq"
    assert meta["config_fingerprint"] == RunConfig.load(cfg).fingerprint()
    freqs = np.array([float(r[0]) for r in rows])
    dens = np.array([[float(v) for v in r[1:]] for r in rows])
    peak = freqs[np.argmax(dens.sum(axis=1))]
    assert abs(peak - 3000.0) <= 17000.0 / 256 / 2
    pgm_text = (tmp_path / "h000_energy.pgm").read_text()
    assert "# config_fingerprint" in pgm_text
    pgm = formats.read_pgm(pgm_text)
    assert pgm.shape == dens.shape and pgm.min() == 0 and pgm.max() == 255
    a, b = dens.ravel(), pgm.ravel()
    order = np.argsort(a, kind="stable")
    assert np.all(np.diff(b[order]) >= 0)


def test_transform_zero_signal(tmp_path, capsys):
    sig = Signal.from_array(np.zeros(512), 17000.0)
    data = LabeledDataset((LabeledItem(sig, "healthy", "z"),))
    path = tmp_path / "z.csv"
    path.write_text(dataset_to_text(data))
    assert run("transform", path, "--out", tmp_path, "--quiet") == 2
    assert "error_class=zero-energy-signal" in capsys.readouterr().err


# -- train / eval ---------------------------------------------------------------


@pytest.fixture(scope="module")
def trained(work):
    d, cfg = work
    assert run("train", d / "a" / "dataset.csv", "--config", cfg, "--out", d / "m",
               "--quiet") == 0
    return d / "m"


def test_model_file_schema(trained):
    text = (trained / "model.txt").read_text()
    keys = {ln.split("=")[0].strip() for ln in text.splitlines()}
    assert set(formats.REQUIRED_MODEL_KEYS) <= keys
    model = formats.model_from_text(text)
    assert formats.model_to_text(model) == text
    tau_line = [ln for ln in text.splitlines() if ln.startswith("tau")][0]
    assert float(tau_line.split("=")[1]) == model.tau


def test_model_round_trip_wavelet(trained):
    from imred.detector import DetectorModel
    from imred.energy import Region
    from imred.separability import ClassStats
    from imred.transform import GridSpec, WaveletSpec, log_scales

    g = GridSpec.wavelet(WaveletSpec(6.5), 256, log_scales(2.0, 20.0, 5), step=8)
    m = DetectorModel(g, Region(((0, 2, 1, 5), (3, 4, 0, 0))), 0.1 + 0.2,
                      ClassStats(1 / 3, 2 / 7, 4), ClassStats(math.pi, 0.0, 5), 1.5, 9, "ff")
    back = formats.model_from_text(formats.model_to_text(m))
    assert back == m


def test_retrain_identical(work, trained, tmp_path):
    d, cfg = work
    assert run("train", d / "a" / "dataset.csv", "--config", cfg, "--out", tmp_path,
               "--quiet") == 0
    for name in ("model.txt", "jtable.csv"):
        assert (tmp_path / name).read_bytes() == (trained / name).read_bytes()


def test_jtable(trained):
    meta, cols, rows = formats.table_from_text((trained / "jtable.csv").read_text())
    assert cols == ["region_id", "scale_lo", "scale_hi", "time_lo", "time_hi", "J"]
    model = formats.read_model(trained / "model.txt")
    best = max(rows, key=lambda r: float(r[5]))
    assert float(best[5]) == pytest.approx(model.j_star, rel=1e-12)


def test_single_class_training(tmp_path, work, capsys):
    d, _ = work
    data = dataset_from_text((d / "a" / "dataset.csv").read_text())
    one = data.subset([i for i, lab in enumerate(data.labels) if lab == "healthy"])
    path = tmp_path / "h.csv"
    path.write_text(dataset_to_text(one))
    assert run("train", path, "--out", tmp_path, "--quiet") == 2
    assert "error_class=insufficient-samples" in capsys.readouterr().err


@pytest.fixture(scope="module")
def cv_dir(work):
    d, cfg = work
    out = d / "cv"
    assert run("eval", d / "a" / "dataset.csv", "--cv", 10, "--baselines", "--config", cfg,
               "--out", out, "--quiet") == 0
    return out


def test_cv_report_rows(cv_dir):
    meta, cols, rows = formats.table_from_text((cv_dir / "report.csv").read_text())
    assert cols == list(formats.REPORT_COLUMNS)
    names = [r[0] for r in rows]
    assert names[:10] == [str(i) for i in range(10)]
    assert names[10:] == ["pooled", "baseline_fourier", "baseline_waveletband"]
    assert "pooled_auc_ci95" in meta and "config_fingerprint" in meta


def test_roc_csv(cv_dir):
    text = (cv_dir / "roc.csv").read_text()
    meta, cols, rows = formats.table_from_text(text)
    assert cols == ["threshold", "fpr", "tpr"]
    assert (float(rows[0][1]), float(rows[0][2])) == (0.0, 0.0)
    assert (float(rows[-1][1]), float(rows[-1][2])) == (1.0, 1.0)
    assert formats.table_to_text(cols, rows, meta["config_fingerprint"],
                                 meta["seed"]) == text


def test_eval_rerun_identical(work, cv_dir, tmp_path):
    d, cfg = work
    assert run("eval", d / "a" / "dataset.csv", "--cv", 10, "--baselines", "--config", cfg,
               "--out", tmp_path, "--quiet") == 0
    for name in ("report.csv", "roc.csv"):
        assert (tmp_path / name).read_bytes() == (cv_dir / name).read_bytes()


def test_eval_with_model(work, trained, cv_dir, tmp_path):
    d, cfg = work
    assert run("eval", d / "a" / "dataset.csv", "--model", trained / "model.txt",
               "--config", cfg, "--out", tmp_path, "--quiet") == 0
    _, _, rows = formats.table_from_text((tmp_path / "report.csv").read_text())
    _, _, cv_rows = formats.table_from_text((cv_dir / "report.csv").read_text())
    in_sample = float(rows[-1][2])
    pooled_cv = float([r for r in cv_rows if r[0] == "pooled"][0][2])
    assert rows[-1][0] == "pooled"
    assert in_sample >= pooled_cv


# -- sensitivity ----------------------------------------------------------------


def test_sensitivity_report(work, tmp_path):
    _, cfg = work
    assert run("sensitivity", "--config", cfg, "--out", tmp_path, "--quiet") == 0
    text = (tmp_path / "sensitivity.csv").read_text()
    meta, cols, rows = formats.table_from_text(text)
    assert len(rows) == 5
    assert all(float(v) == 0.0 for v in rows[-1][:5])
    ratio = [float(r[cols.index("ratio_coeff")]) for r in rows[1:4]]
    assert all(3.0 <= v <= 5.0 for v in ratio)
    assert run("sensitivity", "--config", cfg, "--out", tmp_path / "b", "--quiet") == 0
    assert (tmp_path / "b" / "sensitivity.csv").read_text() == text
