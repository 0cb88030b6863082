"""Harness configuration: one JSON document holding every tunable.

The document has five optional sections; anything absent takes its default::

    {
      "material":    {... MaterialParams fields ...},
      "robot":       {... RobotSpec fields ...},
      "evaluation":  {... EvalConfig fields, "contact": {... ContactModel ...}},
      "experiments": {"generations": 200, "runs": 60, "base_seed": 0,
                      "mutation": {"sigma_p": 1.2, ...}},
      "out_dir":     "results"
    }

Unknown keys are rejected with the dotted path of the offending key.  The
genome bounds (pressure, angle, f/phi range) belong to the model and cannot
be set from a config file.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .control import MutationParams
from .environment import EvalConfig, desk_config
from .io import atomic_write_text
from .lattice import ContactModel, MaterialParams
from .robot import RobotSpec

CONFIG_SCHEMA = "morphsim.config/1"
OUT_DIR_ENV = "MORPHSIM_OUT"

# keys that look like tunables but are fixed by the genome definition
_FIXED_BOUNDS = {"p_range", "p_kpa_range", "theta_range", "theta_deg_range",
                 "t_max", "f_range", "phi_range"}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentOverrides:
    generations: int = 200
    runs: int = 60
    base_seed: int = 0
    mutation: MutationParams = field(default_factory=MutationParams)

    def __post_init__(self):
        if self.generations < 1 or self.runs < 1:
            raise ConfigError("experiments.generations and experiments.runs must be >= 1")
        if self.base_seed < 0:
            raise ConfigError("experiments.base_seed must be >= 0")


@dataclass(frozen=True)
class HarnessConfig:
    material: MaterialParams = field(default_factory=MaterialParams)
    robot: RobotSpec = field(default_factory=RobotSpec)
    evaluation: EvalConfig = field(default_factory=EvalConfig)
    experiments: ExperimentOverrides = field(default_factory=ExperimentOverrides)
    out_dir: str | None = None

    def resolved_out_dir(self) -> Path:
        """``out_dir`` if set, else ``$MORPHSIM_OUT``, else ``./results``."""
        return Path(self.out_dir or os.environ.get(OUT_DIR_ENV) or "results")

    def to_dict(self) -> dict:
        ev = dataclasses.asdict(self.evaluation)
        return {"schema": CONFIG_SCHEMA,
                "material": dataclasses.asdict(self.material),
                "robot": dataclasses.asdict(self.robot),
                "evaluation": ev,
                "experiments": dataclasses.asdict(self.experiments),
                "out_dir": self.out_dir}

    @classmethod
    def from_dict(cls, doc: dict) -> "HarnessConfig":
        if not isinstance(doc, dict):
            raise ConfigError("config document must be an object")
        _reject_unknown(doc, {"schema", "material", "robot", "evaluation",
                              "experiments", "out_dir"}, "")
        schema = doc.get("schema", CONFIG_SCHEMA)
        if schema != CONFIG_SCHEMA:
            raise ConfigError(f"schema: expected {CONFIG_SCHEMA!r}, got {schema!r}")
        ev = dict(_section(doc, "evaluation"))
        contact = _build(ContactModel, ev.pop("contact", {}) or {}, "evaluation.contact")
        exp = dict(_section(doc, "experiments"))
        mutation = _build(MutationParams, exp.pop("mutation", {}) or {},
                          "experiments.mutation")
        out_dir = doc.get("out_dir")
        if out_dir is not None and not isinstance(out_dir, str):
            raise ConfigError("out_dir: must be a string or null")
        return cls(material=_build(MaterialParams, _section(doc, "material"), "material"),
                   robot=_build(RobotSpec, _section(doc, "robot"), "robot"),
                   evaluation=_build(EvalConfig, dict(ev, contact=contact), "evaluation"),
                   experiments=_build(ExperimentOverrides,
                                      dict(exp, mutation=mutation), "experiments"),
                   out_dir=out_dir)


def desk_harness_config(**overrides) -> HarnessConfig:
    """Defaults with the reduced-resolution evaluation."""
    return HarnessConfig(evaluation=desk_config(), **overrides)


def _section(doc: dict, name: str) -> dict:
    sec = doc.get(name, {})
    if sec is None:
        return {}
    if not isinstance(sec, dict):
        raise ConfigError(f"{name}: must be an object")
    return sec


def _reject_unknown(doc: dict, allowed: set, prefix: str) -> None:
    for key in doc:
        if key not in allowed:
            path = f"{prefix}.{key}" if prefix else key
            if key in _FIXED_BOUNDS:
                raise ConfigError(f"{path}: genome bounds are fixed by the model "
                                  "and cannot be overridden")
            raise ConfigError(f"{path}: unknown key")


_NESTED = {"contact", "mutation"}


def _build(cls, values: dict, prefix: str):
    if not isinstance(values, dict):
        raise ConfigError(f"{prefix}: must be an object")
    names = {f.name for f in dataclasses.fields(cls)}
    _reject_unknown(values, names, prefix)
    for f in dataclasses.fields(cls):
        if f.name in values and f.name not in _NESTED:
            _check_type(values[f.name], f, f"{prefix}.{f.name}")
    try:
        return cls(**values)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{prefix}: {exc}") from None


def _check_type(value, f: dataclasses.Field, path: str) -> None:
    kind = f.type if isinstance(f.type, str) else getattr(f.type, "__name__", str(f.type))
    if value is None:
        if "None" in kind:
            return
        raise ConfigError(f"{path}: must not be null")
    if kind.startswith("bool"):
        ok = isinstance(value, bool)
    elif kind.startswith("int"):
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif kind.startswith("float"):
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    else:
        ok = True
    if not ok:
        raise ConfigError(f"{path}: expected {kind.split(' ')[0]}, got {value!r}")


def load_config(path: str | os.PathLike) -> HarnessConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"{p}: no such config file")
    text = p.read_text()
    if not text.strip():
        return HarnessConfig()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: malformed JSON ({exc.msg}, line {exc.lineno})") from None
    return HarnessConfig.from_dict(doc)


def save_config(config: HarnessConfig, path: str | os.PathLike) -> None:
    atomic_write_text(path, json.dumps(config.to_dict(), indent=2) + "\n")


__all__ = ["HarnessConfig", "ExperimentOverrides", "ConfigError", "load_config",
           "save_config", "desk_harness_config", "OUT_DIR_ENV", "CONFIG_SCHEMA"]
