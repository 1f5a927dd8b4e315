"""Experiment configuration: typed dataclasses and the INI-style file format.

A config file has up to four sections::

    [experiment]
    name = doa_estimation          ; required
    master_seed = 1                ; required
    snr_grid_db = [0, 5, 10, 15, 20]  ; required, strictly increasing
    trials_per_point = 2000

    [channel]                      ; scenario parameters, see *Params below
    num_antennas = 16

    [network]
    hidden_sizes = [256, 256]

    [train]
    learning_rate = 0.01
    num_iterations = 5000

Values are Python literals (numbers, lists, quoted or bare strings,
``true``/``false``). Unknown sections or keys, wrong types and missing
required keys raise :class:`ConfigError` naming the ``section.key`` path.
"""

from __future__ import annotations

import ast
import configparser
import dataclasses
import hashlib
import json
import typing
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

__all__ = [
    "ConfigError",
    "ExperimentName",
    "OfdmParams",
    "NomaParams",
    "AutoencoderParams",
    "DoaParams",
    "GainParams",
    "MmwaveParams",
    "NetworkSection",
    "TrainSection",
    "ExperimentConfig",
    "PARAMS_BY_NAME",
    "load_config",
    "parse_config_text",
    "apply_overrides",
    "config_hash",
    "config_to_dict",
    "schema_description",
]


class ConfigError(ValueError):
    """Schema violation; ``key`` is the offending ``section.key`` path."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


class ExperimentName(str, Enum):
    OFDM_RECEIVER = "ofdm_receiver"
    NOMA_DETECTION = "noma_detection"
    AUTOENCODER_74 = "autoencoder_74"
    DOA_ESTIMATION = "doa_estimation"
    GAIN_ESTIMATION = "gain_estimation"
    MMWAVE_PRECODING = "mmwave_precoding"


@dataclass(frozen=True)
class OfdmParams:
    num_subcarriers: int = 64
    cp_length: int = 16
    num_taps: int = 8
    tap_decay: float = 0.3
    fading: str = "rayleigh"  # or "none": a single unit tap
    constellation: str = "QPSK"
    reduced_pilot_spacing: int = 8
    dnn_subcarriers: int = 16
    pilot_boost_db: float = 0.0
    scenarios: tuple[str, ...] = ("full_pilots", "reduced_pilots", "no_cp")
    train_snr_db: tuple[float, ...] = (5.0, 25.0)
    include_dnn: bool = True


@dataclass(frozen=True)
class NomaParams:
    alpha: float = 0.8
    constellation: str = "QPSK"
    num_pilots: int = 2
    symbols_per_frame: int = 32
    csi_pilot_boost_db: tuple[float, ...] = (0.0, 10.0)
    train_snr_db: tuple[float, ...] = (0.0, 30.0)
    include_dnn: bool = True


@dataclass(frozen=True)
class AutoencoderParams:
    k: int = 4
    n: int = 7
    train_ebn0_db: tuple[float, ...] = (5.0, 8.0)
    include_dnn: bool = True


@dataclass(frozen=True)
class DoaParams:
    num_antennas: int = 16
    element_spacing: float = 0.5
    # Beyond about +-60 degrees a half-wavelength array nearly aliases the
    # two endfire directions; 90 covers the whole half plane.
    max_angle_deg: float = 60.0
    sample_step_deg: float = 0.1
    cell_step_deg: float = 1.0
    train_size: int = 20000
    val_size: int = 2000
    test_size: int = 2000
    train_snr_db: tuple[float, ...] = (0.0, 20.0)
    music_grid_step_deg: float = 0.1
    music_snapshots: int = 1
    include_dnn: bool = True


@dataclass(frozen=True)
class GainParams:
    num_antennas: int = 16
    element_spacing: float = 0.5
    num_paths: int = 1
    num_pilots: int = 4
    symbols_per_frame: int = 32
    constellation: str = "QPSK"
    music_grid_step_deg: float = 0.1
    train_size: int = 10000
    val_size: int = 1000
    train_snr_db: tuple[float, ...] = (0.0, 20.0)
    include_dnn: bool = True


@dataclass(frozen=True)
class MmwaveParams:
    num_tx: int = 16
    num_rx: int = 4
    num_clusters: int = 4
    rays_per_cluster: int = 5
    angle_spread_deg: float = 7.5
    carrier_ghz: float = 28.0
    num_streams: int = 2
    num_rf: int = 4
    hybrid_iters: int = 20
    symbols_per_channel: int = 16
    train_samples: int = 4000
    include_dnn: bool = True


PARAMS_BY_NAME = {
    ExperimentName.OFDM_RECEIVER: OfdmParams,
    ExperimentName.NOMA_DETECTION: NomaParams,
    ExperimentName.AUTOENCODER_74: AutoencoderParams,
    ExperimentName.DOA_ESTIMATION: DoaParams,
    ExperimentName.GAIN_ESTIMATION: GainParams,
    ExperimentName.MMWAVE_PRECODING: MmwaveParams,
}


@dataclass(frozen=True)
class NetworkSection:
    hidden_sizes: tuple[int, ...] = (128, 128)
    activation: str = "relu"


@dataclass(frozen=True)
class TrainSection:
    learning_rate: float = 0.01
    momentum: float = 0.9
    weight_decay: float = 1e-4
    batch_size: int = 128
    num_iterations: int = 5000
    val_interval: int = 500


# Desk-scale defaults per experiment, applied before the file's own values.
DEFAULT_NETWORK = {
    ExperimentName.OFDM_RECEIVER: {"hidden_sizes": (256, 128)},
    ExperimentName.NOMA_DETECTION: {"hidden_sizes": (64, 64)},
    ExperimentName.AUTOENCODER_74: {"hidden_sizes": (32,)},
    ExperimentName.DOA_ESTIMATION: {"hidden_sizes": (256, 256)},
    ExperimentName.GAIN_ESTIMATION: {"hidden_sizes": (64, 64)},
    ExperimentName.MMWAVE_PRECODING: {"hidden_sizes": (256, 256)},
}
DEFAULT_TRAIN = {
    ExperimentName.OFDM_RECEIVER: {"learning_rate": 0.02, "num_iterations": 4000},
    ExperimentName.NOMA_DETECTION: {"learning_rate": 0.02, "num_iterations": 6000},
    ExperimentName.AUTOENCODER_74: {"learning_rate": 0.02, "num_iterations": 6000, "batch_size": 256},
    ExperimentName.DOA_ESTIMATION: {"learning_rate": 0.02, "num_iterations": 6000},
    ExperimentName.GAIN_ESTIMATION: {"learning_rate": 0.005, "num_iterations": 4000},
    ExperimentName.MMWAVE_PRECODING: {
        "learning_rate": 0.001,
        "momentum": 0.85,
        "weight_decay": 1e-4,
        "num_iterations": 3000,
    },
}


@dataclass(frozen=True)
class ExperimentConfig:
    name: ExperimentName
    snr_grid_db: tuple
    master_seed: int
    trials_per_point: int = 1000
    channel: typing.Any = None
    network: NetworkSection = field(default_factory=NetworkSection)
    train: TrainSection = field(default_factory=TrainSection)

    def __post_init__(self):
        object.__setattr__(self, "name", ExperimentName(self.name))
        grid = tuple(float(x) for x in self.snr_grid_db)
        object.__setattr__(self, "snr_grid_db", grid)
        if not grid:
            raise ConfigError("experiment.snr_grid_db", "must not be empty")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError("experiment.snr_grid_db", "must be strictly increasing")
        if self.trials_per_point < 1:
            raise ConfigError("experiment.trials_per_point", "must be >= 1")
        if self.channel is None:
            object.__setattr__(self, "channel", PARAMS_BY_NAME[self.name]())
        elif not isinstance(self.channel, PARAMS_BY_NAME[self.name]):
            raise ConfigError("channel", f"wrong parameter type for {self.name.value}")

    @classmethod
    def default(cls, name, **overrides) -> "ExperimentConfig":
        """Desk-scale configuration for ``name``; keyword overrides use
        ``section__key`` (e.g. ``train__num_iterations=10``) or top-level
        experiment keys."""
        name = ExperimentName(name)
        sections = {"experiment": {}, "channel": {}, "network": {}, "train": {}}
        for key, value in overrides.items():
            if "__" in key:
                sec, k = key.split("__", 1)
                sections[sec][k] = value
            else:
                sections["experiment"][key] = value
        sections["experiment"].setdefault("snr_grid_db", (0.0, 5.0, 10.0, 15.0, 20.0))
        sections["experiment"].setdefault("master_seed", 1)
        sections["experiment"]["name"] = name.value
        return _build(sections)


_EXPERIMENT_KEYS = {
    "name": str,
    "snr_grid_db": tuple[float, ...],
    "master_seed": int,
    "trials_per_point": int,
}
_REQUIRED = ("name", "master_seed", "snr_grid_db")


def _coerce(path: str, value, tp):
    origin = typing.get_origin(tp)
    if origin is tuple:
        args = typing.get_args(tp)
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            value = [value]
        if isinstance(value, str) and args[0] is str:
            value = [value]
        if not isinstance(value, (list, tuple)):
            raise ConfigError(path, f"expected a list, got {value!r}")
        elem = args[0]
        return tuple(_coerce(f"{path}[{i}]", v, elem) for i, v in enumerate(value))
    if tp is bool:
        if isinstance(value, bool):
            return value
        if isinstance(value, str) and value.lower() in ("true", "false", "yes", "no", "1", "0"):
            return value.lower() in ("true", "yes", "1")
        raise ConfigError(path, f"expected a boolean, got {value!r}")
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(path, f"expected an integer, got {value!r}")
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(path, f"expected a number, got {value!r}")
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(path, f"expected a string, got {value!r}")
        return value
    raise ConfigError(path, f"unsupported schema type {tp!r}")


def _parse_literal(raw: str):
    text = raw.strip()
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text


def _section_schema(cls) -> dict:
    hints = typing.get_type_hints(cls)
    return {f.name: hints[f.name] for f in dataclasses.fields(cls)}


def _build_section(section: str, cls, values: dict, defaults: dict | None = None):
    schema = _section_schema(cls)
    kwargs = dict(defaults or {})
    for key, value in values.items():
        if key not in schema:
            raise ConfigError(f"{section}.{key}", "unknown key")
        kwargs[key] = _coerce(f"{section}.{key}", value, schema[key])
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(section, str(exc)) from exc


def _build(sections: dict) -> ExperimentConfig:
    for sec in sections:
        if sec not in ("experiment", "channel", "network", "train"):
            raise ConfigError(sec, "unknown section")
    exp = dict(sections.get("experiment", {}))
    for key in _REQUIRED:
        if key not in exp:
            raise ConfigError(f"experiment.{key}", "required key is missing")
    for key in exp:
        if key not in _EXPERIMENT_KEYS:
            raise ConfigError(f"experiment.{key}", "unknown key")
    typed = {k: _coerce(f"experiment.{k}", v, _EXPERIMENT_KEYS[k]) for k, v in exp.items()}
    try:
        name = ExperimentName(typed["name"])
    except ValueError:
        choices = ", ".join(e.value for e in ExperimentName)
        raise ConfigError("experiment.name", f"unknown experiment {typed['name']!r} (choose from {choices})")
    channel = _build_section("channel", PARAMS_BY_NAME[name], sections.get("channel", {}))
    network = _build_section("network", NetworkSection, sections.get("network", {}), DEFAULT_NETWORK[name])
    train = _build_section("train", TrainSection, sections.get("train", {}), DEFAULT_TRAIN[name])
    try:
        return ExperimentConfig(
            name=name,
            snr_grid_db=typed["snr_grid_db"],
            master_seed=typed["master_seed"],
            trials_per_point=typed.get("trials_per_point", 1000),
            channel=channel,
            network=network,
            train=train,
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError("experiment", str(exc)) from exc


def _read_sections(text: str) -> dict:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("<file>", f"cannot parse config: {exc}") from exc
    return {sec: {k: _parse_literal(v) for k, v in parser.items(sec)} for sec in parser.sections()}


def _split_override(item: str) -> tuple[str, str, str]:
    if "=" not in item:
        raise ConfigError(item, "override must look like key=value")
    key, raw = item.split("=", 1)
    key = key.strip()
    if "." in key:
        sec, k = key.split(".", 1)
        return sec, k, raw
    return "", key, raw


def apply_overrides(sections: dict, overrides) -> dict:
    """Merge ``key=value`` strings. Bare keys resolve to the unique section
    whose schema has them (``experiment`` first)."""
    out = {sec: dict(v) for sec, v in sections.items()}
    name = out.get("experiment", {}).get("name")
    for item in overrides or ():
        sec, key, raw = _split_override(item)
        if not sec:
            sec = _find_section(key, name)
        out.setdefault(sec, {})[key] = _parse_literal(raw)
    return out


def _find_section(key: str, name) -> str:
    if key in _EXPERIMENT_KEYS:
        return "experiment"
    owners = []
    try:
        params_cls = PARAMS_BY_NAME[ExperimentName(name)]
    except (ValueError, KeyError):
        params_cls = None
    for sec, cls in (("channel", params_cls), ("network", NetworkSection), ("train", TrainSection)):
        if cls is not None and key in _section_schema(cls):
            owners.append(sec)
    if len(owners) != 1:
        raise ConfigError(key, "unknown key" if not owners else f"ambiguous key (in {owners})")
    return owners[0]


def parse_config_text(text: str, overrides=()) -> ExperimentConfig:
    return _build(apply_overrides(_read_sections(text), overrides))


def load_config(path, overrides=()) -> ExperimentConfig:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read {p}: {exc}") from exc
    return parse_config_text(text, overrides)


def _plain(v):
    if isinstance(v, Enum):
        return v.value
    if isinstance(v, tuple):
        return [_plain(x) for x in v]
    return v


def config_to_dict(cfg: ExperimentConfig) -> dict:
    return {
        "experiment": {
            "name": cfg.name.value,
            "snr_grid_db": list(cfg.snr_grid_db),
            "master_seed": cfg.master_seed,
            "trials_per_point": cfg.trials_per_point,
        },
        "channel": {k: _plain(v) for k, v in dataclasses.asdict(cfg.channel).items()},
        "network": {k: _plain(v) for k, v in dataclasses.asdict(cfg.network).items()},
        "train": {k: _plain(v) for k, v in dataclasses.asdict(cfg.train).items()},
    }


def config_hash(cfg: ExperimentConfig) -> str:
    """First 16 hex digits of SHA-256 over the resolved config as canonical JSON."""
    blob = json.dumps(config_to_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def schema_description() -> str:
    """Human-readable schema of every section, generated from the dataclasses."""
    lines = ["[experiment]"]
    for k, tp in _EXPERIMENT_KEYS.items():
        req = " (required)" if k in _REQUIRED else ""
        lines.append(f"  {k}: {_type_name(tp)}{req}")
    for name, cls in PARAMS_BY_NAME.items():
        lines.append(f"[channel] for {name.value}")
        for f in dataclasses.fields(cls):
            lines.append(f"  {f.name}: {_type_name(typing.get_type_hints(cls)[f.name])} = {f.default!r}")
    for sec, cls in (("network", NetworkSection), ("train", TrainSection)):
        lines.append(f"[{sec}]")
        for f in dataclasses.fields(cls):
            lines.append(f"  {f.name}: {_type_name(typing.get_type_hints(cls)[f.name])} = {f.default!r}")
    return "\n".join(lines)


def _type_name(tp) -> str:
    if typing.get_origin(tp) is tuple:
        return f"list[{typing.get_args(tp)[0].__name__}]"
    return tp.__name__
