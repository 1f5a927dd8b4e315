"""Experiment pipelines, configuration and result tables."""

from .common import RunOutput
from .config import (
    ConfigError,
    ExperimentConfig,
    ExperimentName,
    apply_overrides,
    config_hash,
    config_to_dict,
    load_config,
    parse_config_text,
    schema_description,
)
from .datasets import GeneratedDataset, read_dataset, write_dataset
from .registry import EXPERIMENTS, DatasetUnsupported, generate_dataset, run_experiment
from .results import CSV_COLUMNS, Metric, MetricValue, SweepResult, SweepRow, compute_metric, mean_stderr, rng_for

__all__ = [
    "CSV_COLUMNS",
    "ConfigError",
    "DatasetUnsupported",
    "EXPERIMENTS",
    "ExperimentConfig",
    "ExperimentName",
    "GeneratedDataset",
    "Metric",
    "MetricValue",
    "RunOutput",
    "SweepResult",
    "SweepRow",
    "apply_overrides",
    "compute_metric",
    "config_hash",
    "config_to_dict",
    "generate_dataset",
    "load_config",
    "mean_stderr",
    "parse_config_text",
    "read_dataset",
    "rng_for",
    "run_experiment",
    "schema_description",
    "write_dataset",
]
