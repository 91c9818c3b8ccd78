"""Run configuration: YAML ingestion, defaults, grids and content digests.

Every key is optional and falls back to the measured device defaults; the
shipped fixture data/device_defaults.yaml spells out all of them.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, fields
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .device import DEFAULT_GAMMA_ATOM_MHZ, DeviceParams
from .protocol import ProtocolConfig

CONFIG_VERSION = 1


class ConfigError(ValueError):
    """Malformed or unknown configuration content."""


@dataclass
class GridSpec:
    """Uniform grid given by start/stop plus either step or num."""

    start: float
    stop: float
    step: float | None = None
    num: int | None = None

    def __post_init__(self):
        if (self.step is None) == (self.num is None):
            raise ConfigError("grid needs exactly one of step or num")
        if self.stop <= self.start:
            raise ConfigError("grid stop must exceed start")
        if self.step is not None and self.step <= 0:
            raise ConfigError("grid step must be positive")
        if self.num is not None and self.num < 2:
            raise ConfigError("grid num must be at least 2")

    def to_array(self) -> np.ndarray:
        if self.num is not None:
            return np.linspace(self.start, self.stop, self.num)
        n = int(round((self.stop - self.start) / self.step)) + 1
        return np.linspace(self.start, self.stop, n)


@dataclass
class SweepConfig:
    nu_mhz: GridSpec = field(default_factory=lambda: GridSpec(5985.0, 6285.0, step=0.1))
    window_us: GridSpec = field(default_factory=lambda: GridSpec(0.05, 0.6, step=0.005))
    theta_rad: GridSpec = field(default_factory=lambda: GridSpec(0.0, math.pi, num=33))
    drive_ratios: list[float] = field(default_factory=lambda: [2.0, 4.0, 6.0])


@dataclass
class SpectroscopyConfig:
    gamma_atom_mhz: float = DEFAULT_GAMMA_ATOM_MHZ


@dataclass
class ReadoutRunConfig:
    n_shots: int = 12_500
    snr: float = 5.75
    n_bins: int = 101
    preselect_sigmas: float = 3.0


@dataclass
class QndRunConfig:
    n_shots: int = 12_500
    noise_var: float = 0.016
    n_theta: int = 9
    scale: float = 1.0
    mc_seeds: int = 100
    gate: float = 0.02
    floor: float = 0.25
    coherence_offset: float = 0.0


@dataclass
class MollowRunConfig:
    gain_truth: float = 0.8
    noise_frac: float = 0.01
    span: float = 2.5
    points: int = 801
    display_offset: float = 0.5


@dataclass
class StarkRunConfig:
    n_points: int = 9
    p_max: float = 4.0
    photons_per_unit: float = 1.0
    noise_frac: float = 0.01


@dataclass
class LossRunConfig:
    components: list[tuple[str, float]] = field(
        default_factory=lambda: [
            ("circulator", 0.08),
            ("switch", 0.05),
            ("connectors", 0.05),
            ("cables", 0.02),
        ]
    )
    detector_gain: float = 1.6
    noise_frac: float = 0.01


@dataclass
class ReferenceValues:
    """Quoted single-shot reference measurements, reported next to the
    composed model predictions (see README on the known bookkeeping gap)."""

    single_shot_fidelity: float = 0.496
    single_shot_dark: float = 0.134
    single_shot_miss: float = 0.37


@dataclass
class RunConfig:
    device: DeviceParams = field(default_factory=DeviceParams)
    protocol: ProtocolConfig = field(default_factory=ProtocolConfig)
    sweeps: SweepConfig = field(default_factory=SweepConfig)
    spectroscopy: SpectroscopyConfig = field(default_factory=SpectroscopyConfig)
    readout: ReadoutRunConfig = field(default_factory=ReadoutRunConfig)
    qnd: QndRunConfig = field(default_factory=QndRunConfig)
    mollow: MollowRunConfig = field(default_factory=MollowRunConfig)
    stark: StarkRunConfig = field(default_factory=StarkRunConfig)
    loss: LossRunConfig = field(default_factory=LossRunConfig)
    reference: ReferenceValues = field(default_factory=ReferenceValues)
    seed: int = 0
    output_dir: str = "out"
    config_version: int = CONFIG_VERSION

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must fit an unsigned 64-bit integer")


_SECTION_TYPES = {
    "device": DeviceParams,
    "protocol": ProtocolConfig,
    "spectroscopy": SpectroscopyConfig,
    "readout": ReadoutRunConfig,
    "qnd": QndRunConfig,
    "mollow": MollowRunConfig,
    "stark": StarkRunConfig,
    "loss": LossRunConfig,
    "reference": ReferenceValues,
}


def _build_section(cls, data: dict, path: str):
    if not isinstance(data, dict):
        raise ConfigError(f"section '{path}' must be a mapping")
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown key '{path}.{sorted(unknown)[0]}'")
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid section '{path}': {exc}") from exc


def _build_grid(data, path: str) -> GridSpec:
    if isinstance(data, dict):
        known = {"start", "stop", "step", "num"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown key '{path}.{sorted(unknown)[0]}'")
        try:
            return GridSpec(**data)
        except (TypeError, ConfigError) as exc:
            raise ConfigError(f"invalid grid '{path}': {exc}") from exc
    raise ConfigError(f"grid '{path}' must be a mapping with start/stop/step|num")


def from_dict(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("top-level config must be a mapping")
    top_known = set(_SECTION_TYPES) | {"sweeps", "seed", "output_dir", "config_version"}
    unknown = set(data) - top_known
    if unknown:
        raise ConfigError(f"unknown key '{sorted(unknown)[0]}'")
    kwargs = {}
    for name, cls in _SECTION_TYPES.items():
        if name in data:
            section = dict(data[name])
            if name == "loss" and "components" in section:
                section["components"] = [
                    (str(k), float(v)) for k, v in dict(section["components"]).items()
                ]
            kwargs[name] = _build_section(cls, section, name)
    if "sweeps" in data:
        sw = data["sweeps"]
        if not isinstance(sw, dict):
            raise ConfigError("section 'sweeps' must be a mapping")
        unknown = set(sw) - {"nu_mhz", "window_us", "theta_rad", "drive_ratios"}
        if unknown:
            raise ConfigError(f"unknown key 'sweeps.{sorted(unknown)[0]}'")
        sweep_kwargs = {}
        for key in ("nu_mhz", "window_us", "theta_rad"):
            if key in sw:
                sweep_kwargs[key] = _build_grid(sw[key], f"sweeps.{key}")
        if "drive_ratios" in sw:
            ratios = [float(r) for r in sw["drive_ratios"]]
            if not ratios or any(r <= 0 for r in ratios):
                raise ConfigError("sweeps.drive_ratios must be positive and non-empty")
            sweep_kwargs["drive_ratios"] = ratios
        kwargs["sweeps"] = SweepConfig(**sweep_kwargs)
    for key in ("seed", "output_dir", "config_version"):
        if key in data:
            kwargs[key] = data[key]
    try:
        return RunConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def to_dict(cfg: RunConfig) -> dict:
    data = asdict(cfg)
    data["loss"]["components"] = {k: v for k, v in cfg.loss.components}
    return data


def load_config(path: str | Path) -> RunConfig:
    """Parse a YAML run configuration; raises ConfigError with key context."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"YAML parse error in {path}: {exc}") from exc
    if data is None:
        data = {}
    return from_dict(data)


def default_config() -> RunConfig:
    return RunConfig()


def default_config_path():
    """Path of the shipped default-parameter fixture."""
    return resources.files("qndsim").joinpath("data/device_defaults.yaml")


def config_digest(cfg: RunConfig) -> str:
    """Stable content hash of the resolved configuration."""
    canonical = json.dumps(to_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()
