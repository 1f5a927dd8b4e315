"""Self-describing dataset files for the learning experiments.

File layout (version 1)::

    PHYLAB-DATASET 1\\n
    <one line of JSON header>\\n
    <features: rows x feature_dim little-endian float64, row-major>
    <labels:   rows x label_dim   little-endian float64, row-major>

The header holds ``experiment``, ``seed``, ``config_hash``, ``rows``,
``feature_dim``, ``label_dim``, ``feature_names``, ``label_names``,
``split_counts`` and ``splits`` (the row indices of each split).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..nn import Dataset

__all__ = ["MAGIC", "VERSION", "GeneratedDataset", "write_dataset", "read_dataset", "partition_lattice"]

MAGIC = "PHYLAB-DATASET"
VERSION = 1


@dataclass
class GeneratedDataset:
    experiment: str
    seed: int
    config_hash: str
    features: np.ndarray
    labels: np.ndarray
    splits: dict
    feature_names: list = field(default_factory=list)
    label_names: list = field(default_factory=list)
    # Extra audit information, e.g. which lattice angles each split used.
    audit: dict = field(default_factory=dict)

    def __post_init__(self):
        self.features = np.ascontiguousarray(self.features, dtype=np.float64)
        self.labels = np.ascontiguousarray(self.labels, dtype=np.float64)
        self.splits = {k: np.asarray(v, dtype=np.int64) for k, v in self.splits.items()}
        self.as_training_set()  # validates shapes and disjointness

    @property
    def split_counts(self) -> dict:
        return {k: int(v.size) for k, v in self.splits.items()}

    def as_training_set(self) -> Dataset:
        return Dataset(self.features, self.labels, self.splits)

    def header(self) -> dict:
        return {
            "experiment": self.experiment,
            "seed": self.seed,
            "config_hash": self.config_hash,
            "rows": int(self.features.shape[0]),
            "feature_dim": int(self.features.shape[1]),
            "label_dim": int(self.labels.shape[1]),
            "feature_names": list(self.feature_names),
            "label_names": list(self.label_names),
            "split_counts": self.split_counts,
            "splits": {k: v.tolist() for k, v in self.splits.items()},
            "audit": self.audit,
        }


def write_dataset(ds: GeneratedDataset, path) -> Path:
    path = Path(path)
    head = json.dumps(ds.header(), sort_keys=True, separators=(",", ":"))
    with open(path, "wb") as fh:
        fh.write(f"{MAGIC} {VERSION}\n".encode("ascii"))
        fh.write(head.encode("utf-8") + b"\n")
        fh.write(ds.features.astype("<f8").tobytes(order="C"))
        fh.write(ds.labels.astype("<f8").tobytes(order="C"))
    return path


def read_dataset(path) -> GeneratedDataset:
    with open(path, "rb") as fh:
        first = fh.readline().decode("ascii", errors="replace").split()
        if len(first) != 2 or first[0] != MAGIC:
            raise ValueError(f"{path}: not a {MAGIC} file")
        if int(first[1]) != VERSION:
            raise ValueError(f"{path}: unsupported dataset version {first[1]}")
        head = json.loads(fh.readline().decode("utf-8"))
        rows, fd, ld = head["rows"], head["feature_dim"], head["label_dim"]
        feats = np.frombuffer(fh.read(rows * fd * 8), dtype="<f8")
        labels = np.frombuffer(fh.read(rows * ld * 8), dtype="<f8")
        if feats.size != rows * fd or labels.size != rows * ld or fh.read(1):
            raise ValueError(f"{path}: payload size does not match the header")
    return GeneratedDataset(
        experiment=head["experiment"],
        seed=head["seed"],
        config_hash=head["config_hash"],
        features=feats.reshape(rows, fd).astype(np.float64),
        labels=labels.reshape(rows, ld).astype(np.float64),
        splits={k: np.asarray(v) for k, v in head["splits"].items()},
        feature_names=head["feature_names"],
        label_names=head["label_names"],
        audit=head.get("audit", {}),
    )


def partition_lattice(num_points: int, sizes: dict, rng: np.random.Generator) -> dict:
    """Split lattice indices ``0..num_points-1`` into disjoint groups.

    Group sizes are proportional to ``sizes`` (sample counts per split),
    each group getting at least one point.
    """
    names = [k for k, v in sizes.items() if v > 0]
    if num_points < len(names):
        raise ValueError(f"{num_points} lattice points cannot serve {len(names)} splits")
    total = sum(sizes[k] for k in names)
    counts = [max(1, int(round(num_points * sizes[k] / total))) for k in names]
    # Absorb rounding in the largest group.
    big = int(np.argmax(counts))
    counts[big] += num_points - sum(counts)
    if counts[big] < 1:
        raise ValueError(f"{num_points} lattice points are too few for split sizes {sizes}")
    perm = rng.permutation(num_points)
    out, start = {}, 0
    for k, c in zip(names, counts):
        out[k] = np.sort(perm[start:start + c])
        start += c
    return out
