"""Labelled signal collections and their CSV form.

File layout (comment lines start with ``#``)::

    # config_fingerprint = ...
    # seed = ...
    id,label,fs,n_samples
    h000,healthy,17000.0,8192
    ...

    id,label,s0,s1,...
    h000,healthy,0.98,...

The first block lists metadata per signal, the second holds the samples.
Floats are written with ``repr`` so a read/write cycle is byte-identical.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InsufficientSamples, InvalidConfig, IOFailure
from .signal_model import SampleGrid, Signal

LABELS = ("healthy", "defective")


@dataclass(frozen=True)
class LabeledItem:
    signal: Signal
    label: str
    id: str


@dataclass(frozen=True)
class LabeledDataset:
    items: tuple

    def __post_init__(self):
        items = tuple(self.items)
        object.__setattr__(self, "items", items)
        ids = [it.id for it in items]
        if len(set(ids)) != len(ids):
            raise InvalidConfig("dataset ids must be unique")
        for it in items:
            if it.label not in LABELS:
                raise InvalidConfig(f"unknown label {it.label!r}")

    def __len__(self):
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    @property
    def labels(self) -> list[str]:
        return [it.label for it in self.items]

    @property
    def ids(self) -> list[str]:
        return [it.id for it in self.items]

    @property
    def signals(self) -> list[Signal]:
        return [it.signal for it in self.items]

    def is_defective(self) -> np.ndarray:
        return np.array([lab == "defective" for lab in self.labels])

    def counts(self) -> dict:
        return {lab: self.labels.count(lab) for lab in LABELS}

    def subset(self, indices) -> "LabeledDataset":
        return LabeledDataset(tuple(self.items[i] for i in indices))

    def require_both_classes(self, minimum: int = 1) -> None:
        c = self.counts()
        if min(c.values()) < minimum:
            raise InsufficientSamples(
                f"need at least {minimum} item(s) per class, have {c}"
            )


def _header(fingerprint: str | None, seed: int | None) -> list[str]:
    lines = []
    if fingerprint is not None:
        lines.append(f"# config_fingerprint = {fingerprint}")
    if seed is not None:
        lines.append(f"# seed = {seed}")
    return lines


def dataset_to_text(data: LabeledDataset, fingerprint=None, seed=None) -> str:
    lines = _header(fingerprint, seed)
    lines.append("id,label,fs,n_samples")
    for it in data:
        lines.append(f"{it.id},{it.label},{it.signal.sample_rate!r},{len(it.signal)}")
    lines.append("")
    n_max = max((len(it.signal) for it in data), default=0)
    lines.append("id,label," + ",".join(f"s{i}" for i in range(n_max)))
    for it in data:
        vals = ",".join(repr(float(v)) for v in it.signal.samples)
        lines.append(f"{it.id},{it.label},{vals}")
    return "\n".join(lines) + "\n"


def write_dataset(path, data: LabeledDataset, fingerprint=None, seed=None) -> None:
    try:
        Path(path).write_text(dataset_to_text(data, fingerprint, seed), encoding="utf-8")
    except OSError as exc:
        raise IOFailure(f"cannot write dataset to {path}: {exc}") from exc


def read_dataset(path) -> LabeledDataset:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IOFailure(f"cannot read dataset {path}: {exc}") from exc
    return dataset_from_text(text)


def dataset_from_text(text: str) -> LabeledDataset:
    rows = [ln for ln in text.splitlines() if not ln.startswith("#")]
    try:
        split = rows.index("")
    except ValueError:
        raise InvalidConfig("dataset file lacks the blank line between blocks") from None
    meta, body = rows[:split], [r for r in rows[split + 1:] if r]
    if not meta or meta[0].replace(" ", "") != "id,label,fs,n_samples":
        raise InvalidConfig("dataset metadata header must be 'id,label,fs,n_samples'")
    info = {}
    for ln in meta[1:]:
        sid, label, fs, n = (p.strip() for p in ln.split(","))
        info[sid] = (label, float(fs), int(n))
    items = []
    for ln in body[1:]:
        parts = ln.split(",")
        sid, label = parts[0].strip(), parts[1].strip()
        if sid not in info:
            raise InvalidConfig(f"signal {sid!r} has no metadata row")
        _, fs, n = info[sid]
        samples = np.array([float(v) for v in parts[2:2 + n]])
        items.append(LabeledItem(Signal(samples, SampleGrid(fs, n)), label, sid))
    return LabeledDataset(tuple(items))
