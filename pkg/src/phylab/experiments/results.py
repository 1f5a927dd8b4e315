"""Metric computation, reproducible seeding and the sweep result table."""

from __future__ import annotations

import io
import math
import zlib
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

__all__ = [
    "Metric",
    "MetricValue",
    "SweepRow",
    "SweepResult",
    "CSV_COLUMNS",
    "compute_metric",
    "mean_stderr",
    "rng_for",
    "stream_id",
    "chunks",
    "format_float",
]

CSV_COLUMNS = ("experiment", "method", "snr_db", "metric", "value", "stderr", "trials", "seed", "config_hash")


class Metric(str, Enum):
    BER = "BER"
    BLER = "BLER"
    MSE_DEG2 = "MSE_deg2"
    RATE = "rate_bps_hz"
    # Normalized channel-estimation error, used by gain estimation.
    NMSE = "NMSE"


@dataclass(frozen=True)
class MetricValue:
    value: float
    stderr: float
    trials: int


def mean_stderr(per_trial) -> MetricValue:
    """Sample mean and standard error of the mean over the first axis."""
    v = np.asarray(per_trial, dtype=float).ravel()
    n = v.size
    if n == 0:
        raise ValueError("no trials")
    se = float(np.std(v, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return MetricValue(float(np.mean(v)), se, n)


def compute_metric(kind, truth, estimate) -> MetricValue:
    """Error metric with standard error over trials (rows).

    * ``BER``: ``truth``/``estimate`` are bit arrays (trials, bits); each row
      contributes its bit-error fraction.
    * ``BLER``: arrays (blocks, bits_per_block) or 1-D message indices; a
      block is wrong if any entry differs.
    * ``MSE_deg2``: angles in degrees, one per trial.
    """
    kind = Metric(kind)
    t = np.asarray(truth)
    e = np.asarray(estimate)
    if t.shape != e.shape:
        raise ValueError(f"shape mismatch {t.shape} vs {e.shape}")
    if kind is Metric.BER:
        t2 = t.reshape(t.shape[0], -1) if t.ndim > 1 else t.reshape(1, -1)
        e2 = e.reshape(t2.shape)
        return mean_stderr(np.mean(t2 != e2, axis=1))
    if kind is Metric.BLER:
        if t.ndim == 1:
            return mean_stderr(t != e)
        return mean_stderr(np.any(t.reshape(t.shape[0], -1) != e.reshape(t.shape[0], -1), axis=1))
    if kind is Metric.MSE_DEG2:
        d = t.astype(float) - e.astype(float)
        return mean_stderr(d * d)
    raise ValueError(f"compute_metric does not handle {kind.value}")


def stream_id(name: str) -> int:
    """Stable integer for a named random stream (method or stage)."""
    return zlib.crc32(name.encode("utf-8"))


def rng_for(master_seed: int, *keys) -> np.random.Generator:
    """Independent generator for ``(master_seed, *keys)``; string keys are hashed."""
    ints = [int(master_seed)] + [stream_id(k) if isinstance(k, str) else int(k) for k in keys]
    return np.random.default_rng(np.random.SeedSequence(ints))


def chunks(total: int, size: int):
    """Yield ``(chunk_index, count)`` covering ``total`` trials."""
    i = 0
    done = 0
    while done < total:
        n = min(size, total - done)
        yield i, n
        done += n
        i += 1


def format_float(x: float) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.9g}"


@dataclass(frozen=True)
class SweepRow:
    method: str
    snr_db: float
    metric: Metric
    value: float
    stderr: float
    trials: int


@dataclass
class SweepResult:
    """Metric curves of one experiment run.

    ``wall_time_s`` is metadata only and never written to the CSV, so the
    CSV bytes depend on the configuration and seed alone.
    """

    experiment: str
    seed: int
    config_hash: str
    rows: list = field(default_factory=list)
    wall_time_s: float = 0.0
    extras: dict = field(default_factory=dict)

    def add(self, method: str, snr_db: float, metric, mv: MetricValue):
        self.rows.append(SweepRow(method, float(snr_db), Metric(metric), mv.value, mv.stderr, mv.trials))

    def check_unique(self):
        keys = [(r.method, r.snr_db, r.metric) for r in self.rows]
        if len(keys) != len(set(keys)):
            raise ValueError("duplicate (method, snr, metric) rows")

    def methods(self, metric=None) -> list:
        seen = []
        for r in self.rows:
            if (metric is None or r.metric == Metric(metric)) and r.method not in seen:
                seen.append(r.method)
        return seen

    def curve(self, method: str, metric) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(snr_db, value, stderr)`` arrays for one method, ordered by SNR."""
        m = Metric(metric)
        rows = sorted((r for r in self.rows if r.method == method and r.metric == m), key=lambda r: r.snr_db)
        if not rows:
            raise KeyError(f"no {m.value} rows for method {method!r}")
        return (
            np.array([r.snr_db for r in rows]),
            np.array([r.value for r in rows]),
            np.array([r.stderr for r in rows]),
        )

    def to_csv(self) -> str:
        self.check_unique()
        buf = io.StringIO()
        buf.write(",".join(CSV_COLUMNS) + "\n")
        for r in self.rows:
            fields = (
                self.experiment,
                r.method,
                format_float(r.snr_db),
                r.metric.value,
                format_float(r.value),
                format_float(r.stderr),
                str(r.trials),
                str(self.seed),
                self.config_hash,
            )
            buf.write(",".join(fields) + "\n")
        return buf.getvalue()

    def write_csv(self, path):
        with open(path, "w", newline="\n", encoding="utf-8") as fh:
            fh.write(self.to_csv())
