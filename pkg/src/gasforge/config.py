"""Experiment configuration: a flat JSON object, validated key by key."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, fields

from .model import PRESETS, make_model

__all__ = ["ConfigError", "ExperimentConfig", "parse_config", "emit_config", "config_hash", "STUDIES"]

STUDIES = ("density", "radial-density", "rejection-scaling", "energy-scaling", "edge-gumbel")
CHAIN_SAMPLERS = ("hmc", "mala", "ula", "tamed")
REQUIRED = ("model", "N", "study")

DEFAULT_DT_LIST = {
    "rejection-scaling": [0.1, 0.05, 0.025, 0.0125],
    "energy-scaling": [0.2, 0.1, 0.05, 0.025],
}


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the offending key."""


@dataclass(frozen=True)
class ExperimentConfig:
    model: str
    N: int
    study: str
    beta: float = 2.0
    sampler: str = "hmc"
    dt: float = 0.1
    alpha: float = 1.0
    gamma: float = 1.0
    T: float = 1000.0
    burn_in_fraction: float = 0.5
    thinning: int = 1
    n_chains: int = 1
    seed: int = 0
    n_leapfrog: int = 1
    dt_list: tuple | None = None
    warmup_T: float = 0.0
    rejection_metric: str = "probability"
    bins: int = 50
    range: tuple | None = None
    r_max: float | None = None
    gumbel_method: str = "moments"
    out: str = "gasforge_out"

    @property
    def n_steps(self) -> int:
        return int(math.ceil(self.T / self.dt - 1e-9))

    @property
    def resolved_dt_list(self) -> list[float]:
        if self.dt_list is not None:
            return list(self.dt_list)
        return list(DEFAULT_DT_LIST.get(self.study, []))

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("dt_list", "range"):
            if d[key] is not None:
                d[key] = list(d[key])
        return d

    def build_model(self):
        return make_model(self.model, self.beta, self.N)


_KINDS = {
    "model": "str", "N": "int", "study": "str", "beta": "float", "sampler": "str",
    "dt": "float", "alpha": "float", "gamma": "float", "T": "float",
    "burn_in_fraction": "float", "thinning": "int", "n_chains": "int", "seed": "int",
    "n_leapfrog": "int", "dt_list": "floats", "warmup_T": "float",
    "rejection_metric": "str", "bins": "int", "range": "pair", "r_max": "float?",
    "gumbel_method": "str", "out": "str",
}


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _coerce(key, value):
    kind = _KINDS[key]
    if kind == "str":
        if not isinstance(value, str):
            raise ConfigError(f"{key} must be a string")
        return value
    if kind == "int":
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        if not isinstance(value, int) or isinstance(value, bool):
            raise ConfigError(f"{key} must be an integer")
        return value
    if kind in ("float", "float?"):
        if value is None and kind == "float?":
            return None
        if not _is_number(value) or not math.isfinite(value):
            raise ConfigError(f"{key} must be a finite number")
        return float(value)
    if kind == "floats":
        if value is None:
            return None
        if not isinstance(value, list) or not all(_is_number(v) for v in value):
            raise ConfigError(f"{key} must be a list of numbers")
        return tuple(float(v) for v in value)
    if kind == "pair":
        if value is None:
            return None
        if not (isinstance(value, list) and len(value) == 2 and all(_is_number(v) for v in value)):
            raise ConfigError(f"{key} must be a list [low, high]")
        return (float(value[0]), float(value[1]))
    raise AssertionError(kind)


def _validate(c: ExperimentConfig) -> None:
    def need(cond, key, msg):
        if not cond:
            raise ConfigError(f"{key} {msg}")

    need(c.model in PRESETS, "model", f"must be one of {sorted(PRESETS)}")
    need(c.study in STUDIES, "study", f"must be one of {list(STUDIES)}")
    need(c.sampler in CHAIN_SAMPLERS, "sampler", f"must be one of {list(CHAIN_SAMPLERS)}")
    need(c.N >= 1, "N", "must be >= 1")
    need(c.beta > 0, "beta", "must be positive")
    need(c.dt > 0, "dt", "must be positive")
    need(c.alpha > 0, "alpha", "must be positive")
    need(c.gamma >= 0, "gamma", "must be nonnegative")
    need(c.T > 0, "T", "must be positive")
    need(0 <= c.burn_in_fraction < 1, "burn_in_fraction", "must lie in [0, 1)")
    need(c.thinning >= 1, "thinning", "must be >= 1")
    need(c.n_chains >= 1, "n_chains", "must be >= 1")
    need(0 <= c.seed < 2**64, "seed", "must be a 64-bit unsigned integer")
    need(c.n_leapfrog >= 1, "n_leapfrog", "must be >= 1")
    need(c.warmup_T >= 0, "warmup_T", "must be nonnegative")
    need(c.bins >= 1, "bins", "must be >= 1")
    need(c.rejection_metric in ("probability", "count"), "rejection_metric", "must be 'probability' or 'count'")
    need(c.gumbel_method in ("moments", "mle"), "gumbel_method", "must be 'moments' or 'mle'")
    need(c.r_max is None or c.r_max > 0, "r_max", "must be positive")
    need(c.range is None or c.range[1] > c.range[0], "range", "must satisfy low < high")
    need(len(c.out) > 0, "out", "must be nonempty")
    if c.dt_list is not None:
        need(all(v > 0 for v in c.dt_list), "dt_list", "entries must be positive")
    if c.study in DEFAULT_DT_LIST:
        dts = sorted(c.resolved_dt_list)
        need(len(dts) >= 3 and dts[-1] >= 4 * dts[0], "dt_list", "needs >= 3 values spanning a factor 4")
    if c.study == "rejection-scaling":
        need(c.sampler in ("hmc", "mala"), "sampler", "must be hmc or mala for rejection-scaling")
    try:
        model = c.build_model()
    except ValueError as exc:
        raise ConfigError(f"model {exc}") from None
    if c.study == "density":
        need(model.particle_dim == 1, "study", "'density' needs a 1D model; use 'radial-density'")
    if c.study == "radial-density":
        need(model.particle_dim >= 2, "study", "'radial-density' needs particle dimension >= 2")
    if c.study in ("density", "radial-density", "edge-gumbel"):
        burn = math.floor(c.burn_in_fraction * c.n_steps)
        need((c.n_steps - burn) // c.thinning >= 1, "thinning", "leaves no recorded sample for this T, dt and burn-in")


def _from_dict(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown key(s): {', '.join(unknown)}")
    missing = [k for k in REQUIRED if k not in data]
    if missing:
        raise ConfigError(f"missing required key(s): {', '.join(missing)}")
    values = {k: _coerce(k, v) for k, v in data.items()}
    config = ExperimentConfig(**values)
    _validate(config)
    return config


def parse_config(text: str, overrides: dict | None = None) -> ExperimentConfig:
    """Parse and validate JSON config text; ``overrides`` (e.g. CLI flags) win over file values."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if isinstance(data, dict) and overrides:
        data = {**data, **{k: v for k, v in overrides.items() if v is not None}}
    return _from_dict(data)


def emit_config(config: ExperimentConfig) -> str:
    """Canonical JSON text for a config (sorted keys, all defaults filled)."""
    return json.dumps(config.to_dict(), sort_keys=True, indent=2) + "\n"


def config_hash(config: ExperimentConfig) -> str:
    return hashlib.sha256(emit_config(config).encode()).hexdigest()
