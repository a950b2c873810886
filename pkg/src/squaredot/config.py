"""Run configuration: nested dataclasses, JSON loading and dotted overrides."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, is_dataclass, replace

from .errors import InvalidArgument


class ConfigError(InvalidArgument):
    pass


@dataclass
class GeometryConfig:
    side_length: float = 100.0  # nm
    corner_fraction: float = 0.25


@dataclass
class MaterialConfig:
    effective_mass_ratio: float = 0.067
    dielectric_constant: float = 12.9
    coulomb: bool = True


@dataclass
class BasisConfig:
    n_max: int = 8
    k_per_block: int = 6


@dataclass
class DensityConfig:
    state_index: int = 0
    resolution: int = 64


@dataclass
class ParamsConfig:
    """Effective parameters for the dynamics commands (meV)."""
    Delta: float | None = None
    J: float | None = None
    E0: float = 0.0
    params_file: str | None = None  # params JSON written by `spectrum`
    alpha: float | None = None
    beta: float | None = None


@dataclass
class TimeConfig:
    n_points: int = 401
    t_max_over_tstar: float = 4.0
    t_max_ps: float | None = None  # overrides t_max_over_tstar


@dataclass
class NoiseSection:
    E_hf: float = 0.0  # micro-eV
    dephasing_rate: float = 0.0  # 1/ps
    samples: int = 1000
    variance_mode: str = "per_component"
    dephasing_operator: str = "tunnelling"
    rounds: int = 5
    input: str = "product"


@dataclass
class ProtocolSection:
    n_dots: int = 1
    trials: int = 10_000
    mode: str = "swap"
    p_ss: float = 1.0
    p_ts: float = 0.0
    confidence: float = 0.99


@dataclass
class TableSection:
    lengths: list = field(default_factory=lambda: [100.0, 200.0, 400.0, 800.0, 1600.0])
    gate_potential: float = 100.0  # meV on the b, d quadrants
    gated: bool = True


@dataclass
class RunConfig:
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    material: MaterialConfig = field(default_factory=MaterialConfig)
    basis: BasisConfig = field(default_factory=BasisConfig)
    density: DensityConfig = field(default_factory=DensityConfig)
    params: ParamsConfig = field(default_factory=ParamsConfig)
    time: TimeConfig = field(default_factory=TimeConfig)
    noise: NoiseSection = field(default_factory=NoiseSection)
    protocol: ProtocolSection = field(default_factory=ProtocolSection)
    table: TableSection = field(default_factory=TableSection)
    seed: int = 0
    out: str = "out"
    format: str = "csv"


def _build(cls, data, path=""):
    if not isinstance(data, dict):
        raise ConfigError(f"{path or 'config'} must be an object")
    known = {f.name: f for f in fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if key not in known:
            raise ConfigError(f"unknown config key {path + key!r}")
        default = getattr(cls(), key)
        if is_dataclass(default):
            kwargs[key] = _build(type(default), value, f"{path}{key}.")
        else:
            kwargs[key] = value
    return cls(**kwargs)


def from_dict(data: dict) -> RunConfig:
    cfg = _build(RunConfig, data)
    validate(cfg)
    return cfg


def load(path: str | None) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    return from_dict(data)


def _coerce(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_override(cfg: RunConfig, dotted: str, value) -> RunConfig:
    """Return a copy with ``a.b = value`` set; strings are parsed as JSON when possible."""
    if isinstance(value, str):
        value = _coerce(value)
    head, _, rest = dotted.partition(".")
    if not hasattr(cfg, head) or head not in {f.name for f in fields(cfg)}:
        raise ConfigError(f"unknown config key {dotted!r}")
    if rest:
        sub = getattr(cfg, head)
        if not is_dataclass(sub):
            raise ConfigError(f"{head!r} has no sub-keys")
        return replace(cfg, **{head: apply_override(sub, rest, value)})
    return replace(cfg, **{head: value})


def validate(cfg: RunConfig):
    if cfg.format not in ("csv", "json"):
        raise ConfigError("format must be 'csv' or 'json'")
    if not isinstance(cfg.seed, int) or not 0 <= cfg.seed < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    if cfg.geometry.side_length <= 0:
        raise ConfigError("geometry.side_length must be > 0")
    if not isinstance(cfg.basis.n_max, int) or cfg.basis.n_max < 2:
        raise ConfigError("basis.n_max must be an integer >= 2")
    if cfg.time.n_points < 0:
        raise ConfigError("time.n_points must be >= 0")
    if cfg.protocol.mode not in ("swap", "aklt"):
        raise ConfigError("protocol.mode must be 'swap' or 'aklt'")
    return cfg


def to_dict(cfg: RunConfig) -> dict:
    """Resolved config for echoing and hashing; the output directory is left out
    so identical runs written to different places are byte-identical."""
    d = asdict(cfg)
    d.pop("out", None)
    return d


def config_hash(cfg: RunConfig) -> str:
    blob = json.dumps(to_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()
