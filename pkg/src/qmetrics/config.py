"""Run configuration: a versioned YAML document with nested sections.

Example::

    schema_version: 1
    grid: {half_length: 15.0, num_points: 151}
    family: {source: preset, preset: two_electron}
    solver: {spin: singlet}
    metrics: {convention: unit_normalized}
    output: {directory: out/fig3}

Every key is checked against the dataclass fields below. Unknown keys and
out-of-range values raise ``ConfigError`` before any computation starts.
"""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any

import yaml

from .dynamics import PropagationConfig
from .grid import Grid
from .metrics import MODES
from .potentials import PRESET_FAMILIES
from .solver2e import DEFAULT_MAX_BASIS, SPIN_SECTORS

SCHEMA_VERSION = 1
OUTPUT_ENV_VAR = "QMETRICS_OUTPUT_DIR"


class ConfigError(ValueError):
    pass


@dataclass
class GridSection:
    half_length: float = 15.0
    num_points: int | None = None


@dataclass
class FamilySection:
    source: str = "preset"
    preset: str | None = None
    seed: int = 0
    count: int = 10
    strength: float = 0.1
    num_terms: int = 3


@dataclass
class SolverSection:
    spin: str = "singlet"
    interacting: bool = True
    max_basis: int = DEFAULT_MAX_BASIS


@dataclass
class PropagationSection:
    field_strength: float = 0.01
    dt: float = 0.01
    total_time: float = 10.0
    record_stride: int = 10
    field_sign: int = 1
    reference: str = "1"


@dataclass
class MetricsSection:
    convention: str | None = None


@dataclass
class OutputSection:
    directory: str = "qmetrics-out"
    figure_format: str = "svg"


@dataclass
class RunConfig:
    schema_version: int = SCHEMA_VERSION
    grid: GridSection = field(default_factory=GridSection)
    family: FamilySection = field(default_factory=FamilySection)
    solver: SolverSection = field(default_factory=SolverSection)
    propagation: PropagationSection = field(default_factory=PropagationSection)
    metrics: MetricsSection = field(default_factory=MetricsSection)
    output: OutputSection = field(default_factory=OutputSection)
    threads: int = 1

    def grid_for(self, electrons: int) -> Grid:
        points = self.grid.num_points or (301 if electrons == 1 else 151)
        return Grid(self.grid.half_length, points)

    def propagation_config(self) -> PropagationConfig:
        p = self.propagation
        return PropagationConfig(p.field_strength, p.dt, p.total_time, p.record_stride, p.field_sign)

    def output_dir(self) -> Path:
        return Path(self.output.directory)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


_SECTIONS = {
    "grid": GridSection,
    "family": FamilySection,
    "solver": SolverSection,
    "propagation": PropagationSection,
    "metrics": MetricsSection,
    "output": OutputSection,
}


def _build_section(name: str, cls, raw: Any):
    if raw is None:
        return cls()
    if not isinstance(raw, dict):
        raise ConfigError(f"section {name!r} must be a mapping")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"unknown key(s) in {name!r}: {', '.join(unknown)}")
    return cls(**raw)


def from_dict(data: dict[str, Any]) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping")
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {', '.join(unknown)}")
    version = data.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version}; expected {SCHEMA_VERSION}")
    sections = {name: _build_section(name, cls, data.get(name)) for name, cls in _SECTIONS.items()}
    cfg = RunConfig(schema_version=version, threads=data.get("threads", 1), **sections)
    validate(cfg)
    return cfg


def load(path: str | Path | None) -> RunConfig:
    if path is None:
        cfg = RunConfig()
    else:
        try:
            data = yaml.safe_load(Path(path).read_text()) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        cfg = from_dict(data)
    env_dir = os.environ.get(OUTPUT_ENV_VAR)
    if env_dir:
        cfg = replace(cfg, output=replace(cfg.output, directory=env_dir))
    return cfg


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ConfigError(message)


def _is_int(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def validate(cfg: RunConfig) -> RunConfig:
    g, f, s, p, m, o = cfg.grid, cfg.family, cfg.solver, cfg.propagation, cfg.metrics, cfg.output
    _require(isinstance(g.half_length, (int, float)) and g.half_length > 0, "grid.half_length must be > 0")
    _require(g.num_points is None or (_is_int(g.num_points) and g.num_points >= 5), "grid.num_points must be an integer >= 5")
    _require(f.source in ("preset", "random"), "family.source must be 'preset' or 'random'")
    _require(f.preset is None or f.preset in PRESET_FAMILIES + ("1e", "2e"), f"family.preset must be one of {PRESET_FAMILIES}")
    _require(_is_int(f.seed) and f.seed >= 0, "family.seed must be a non-negative integer")
    _require(_is_int(f.count) and f.count >= 1, "family.count must be a positive integer")
    _require(isinstance(f.strength, (int, float)) and f.strength >= 0, "family.strength must be non-negative")
    _require(_is_int(f.num_terms) and f.num_terms >= 1, "family.num_terms must be a positive integer")
    _require(s.spin in SPIN_SECTORS, f"solver.spin must be one of {SPIN_SECTORS}")
    _require(isinstance(s.interacting, bool), "solver.interacting must be a boolean")
    _require(_is_int(s.max_basis) and s.max_basis > 0, "solver.max_basis must be a positive integer")
    _require(m.convention is None or m.convention in MODES + ("unit",), f"metrics.convention must be one of {MODES}")
    _require(o.figure_format in ("svg", "png", "pdf"), "output.figure_format must be svg, png or pdf")
    _require(_is_int(cfg.threads) and cfg.threads >= 1, "threads must be a positive integer")
    try:
        cfg.propagation_config()
    except ValueError as exc:
        raise ConfigError(f"propagation: {exc}") from exc
    p.reference = str(p.reference)
    return cfg
