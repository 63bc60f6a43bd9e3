"""File formats: libsvm dataset ingestion, deterministic CSV writers, and the
run manifest that makes every CLI invocation reproducible."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .util import format_float

MSE_COLUMNS = ("family", "method", "T", "spec", "n", "trial", "value")
METRICS_COLUMNS = ("iteration", "rule", "ksd_u", "seconds", "theta_hash")


@dataclass
class LibsvmDataset:
    """Densified libsvm data: features (N, D) and 0/1 labels (N,)."""

    features: np.ndarray
    labels: np.ndarray

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]


_LABEL_MAP = {"+1": 1.0, "1": 1.0, "-1": 0.0, "0": 0.0}


def parse_libsvm(text: str, dim_hint: int | None = None) -> LibsvmDataset:
    """Parse libsvm-format text: lines of "label idx:val idx:val ...".

    Indices are 1-based and must be strictly increasing within a row; labels
    {-1, +1} or {0, 1} are normalized to {0, 1}. Comments ('#' to end of
    line), blank lines, and stray whitespace are tolerated. The dense width
    is max(max index, dim_hint). Malformed input raises ValueError with the
    offending line number.
    """
    rows: list[list[tuple[int, float]]] = []
    labels: list[float] = []
    max_idx = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        label = _LABEL_MAP.get(tokens[0])
        if label is None:
            raise ValueError(f"line {lineno}: unrecognized label {tokens[0]!r}")
        entries: list[tuple[int, float]] = []
        prev = 0
        for tok in tokens[1:]:
            idx_str, _, val_str = tok.partition(":")
            try:
                idx = int(idx_str)
                val = float(val_str)
            except ValueError:
                raise ValueError(f"line {lineno}: malformed feature token {tok!r}") from None
            if idx <= prev:
                raise ValueError(f"line {lineno}: indices must be strictly increasing "
                                 f"and >= 1 (saw {idx} after {prev})")
            prev = idx
            entries.append((idx, val))
        max_idx = max(max_idx, prev)
        rows.append(entries)
        labels.append(label)
    if not rows:
        raise ValueError("no data lines found")
    dim = max(max_idx, dim_hint or 0)
    features = np.zeros((len(rows), dim))
    for r, entries in enumerate(rows):
        for idx, val in entries:
            features[r, idx - 1] = val
    return LibsvmDataset(features=features, labels=np.asarray(labels))


def load_libsvm(path, dim_hint: int | None = None) -> LibsvmDataset:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_libsvm(fh.read(), dim_hint=dim_hint)


def serialize_libsvm(dataset: LibsvmDataset) -> str:
    """Inverse of parse_libsvm (zero entries are dropped, labels become +/-1)."""
    lines = []
    for row, label in zip(dataset.features, dataset.labels):
        parts = ["+1" if label == 1 else "-1"]
        for j in np.nonzero(row)[0]:
            parts.append(f"{j + 1}:{format_float(row[j])}")
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def _format_cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    return str(value)


def write_csv(path, columns, rows) -> None:
    """Write dict rows with a fixed column order, 17-significant-digit floats,
    minimal quoting, and LF line endings, so identical inputs give identical
    bytes."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format_cell(row[c]) for c in columns])


def write_particles_csv(path, particles: np.ndarray) -> None:
    """One row per particle, header z0,...,z{d-1}."""
    z = np.atleast_2d(np.asarray(particles, dtype=np.float64))
    columns = [f"z{j}" for j in range(z.shape[1])]
    rows = ({c: row[j] for j, c in enumerate(columns)} for row in z)
    write_csv(path, columns, rows)


def write_manifest(path, command: str, config: dict, seed: int) -> None:
    """Record the fully resolved run configuration for exact reproduction."""
    from . import __version__

    payload = {
        "command": command,
        "seed": seed,
        "config": config,
        "versions": {"steinsampler": __version__, "numpy": np.__version__},
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
