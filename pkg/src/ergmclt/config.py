"""Experiment configuration: a TOML file with one table per module.

Precedence, lowest first: built-in defaults, the config file, command-line flags.
Every key is checked against ``SCHEMA``; unknown tables or keys are errors.

Example::

    seed = 7
    out = "runs/edge-triangle"

    [model]
    motifs = ["edge", "triangle"]
    beta = [0.2, 0.1]

    [dynamics]
    sizes = [32, 64]
    samples = 2000
    well = "auto"
"""

from __future__ import annotations

import copy
import json
import sys
from dataclasses import dataclass, field
from typing import Any, Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .exceptions import ConfigError
from .model import ErgmSpec

_NUM = (int, float)
_OPT_INT = (int, type(None))
_AUTO_NUM = (int, float, str)

# table -> key -> (accepted types, default)
SCHEMA: dict[str, dict[str, tuple[tuple, Any]]] = {
    "": {
        "seed": ((int,), 0),
        "out": ((str,), "ergmclt-out"),
        "workers": ((int,), 0),
        "force_critical": ((bool,), False),
        "allow_local_well": ((bool,), False),
    },
    "model": {
        "motifs": ((list,), ["edge", "triangle"]),
        "beta": ((list,), [0.2, 0.1]),
    },
    "phase": {
        "grid": ((int,), 1000),
        "regime_map": ((bool,), False),
        "beta0_values": ((list,), []),
        "beta1_values": ((list,), []),
        "beta2_values": ((list,), [0.0]),
        "map_grid": ((int,), 2000),
    },
    "dynamics": {
        "sizes": ((list,), [32]),
        "burn_in": (_OPT_INT, None),
        "thinning": (_OPT_INT, None),
        "samples": ((int,), 1000),
        "replicas": ((int,), 100),
        "init": ((str,), "er"),
        "well": ((str, bool), "auto"),
        "p": (_AUTO_NUM, "auto"),
        "eta": (_AUTO_NUM, "auto"),
        "horizon": (_OPT_INT, None),
        "record_every": (_OPT_INT, None),
    },
    "observables": {
        "sample": ((list,), ["edges"]),
        "clt": ((str,), "edges"),
        "vertex": ((int,), 0),
        "hajek_motif": ((str,), "triangle"),
        "rooted": ((bool,), False),
        "rho": ((int,), 0),
    },
    "stein": {
        "mode": ((str,), "edge"),
        "vertex": ((int,), 0),
        "integrate_y": ((bool,), True),
        "blocks": ((int,), 20),
    },
    "oracle": {
        "max_n": ((int,), 7),
        "check_samples": ((int,), 10000),
        "dump": ((bool,), False),
    },
}


def defaults() -> dict:
    out: dict = {}
    for table, keys in SCHEMA.items():
        target = out if table == "" else out.setdefault(table, {})
        for k, (_, d) in keys.items():
            target[k] = copy.deepcopy(d)
    return out


def _check_value(where: str, value, types: tuple) -> None:
    # bool is an int subclass; keep it out of numeric keys
    if isinstance(value, bool) and bool not in types:
        raise ConfigError(f"{where}: expected {'/'.join(t.__name__ for t in types)}, got bool")
    if not isinstance(value, types):
        raise ConfigError(f"{where}: expected {'/'.join(t.__name__ for t in types)}, got {type(value).__name__}")


def validate(raw: dict) -> dict:
    """Merge ``raw`` over the defaults, rejecting unknown keys and wrong types."""
    cfg = defaults()
    for key, value in raw.items():
        if isinstance(value, dict):
            if key not in SCHEMA or key == "":
                raise ConfigError(f"unknown table [{key}]")
            for k, v in value.items():
                if k not in SCHEMA[key]:
                    raise ConfigError(f"unknown key {key}.{k}")
                _check_value(f"{key}.{k}", v, SCHEMA[key][k][0])
                cfg[key][k] = v
        else:
            if key not in SCHEMA[""]:
                raise ConfigError(f"unknown key {key}")
            _check_value(key, value, SCHEMA[""][key][0])
            cfg[key] = value
    _semantic_checks(cfg)
    return cfg


def _semantic_checks(cfg: dict) -> None:
    dyn = cfg["dynamics"]
    if not dyn["sizes"] or not all(isinstance(n, int) and not isinstance(n, bool) and n >= 2 for n in dyn["sizes"]):
        raise ConfigError("dynamics.sizes must be a non-empty list of integers >= 2")
    if dyn["samples"] < 1 or dyn["replicas"] < 1:
        raise ConfigError("dynamics.samples and dynamics.replicas must be positive")
    for k in ("p", "eta"):
        if isinstance(dyn[k], str) and dyn[k] != "auto":
            raise ConfigError(f"dynamics.{k} must be a number or \"auto\"")
    if isinstance(dyn["well"], str) and dyn["well"] not in ("auto", "on", "off"):
        raise ConfigError("dynamics.well must be true, false, \"auto\", \"on\" or \"off\"")
    if dyn["init"] not in ("er", "empty", "complete"):
        raise ConfigError("dynamics.init must be er, empty or complete")
    if cfg["stein"]["mode"] not in ("edge", "degree"):
        raise ConfigError("stein.mode must be edge or degree")
    if cfg["observables"]["clt"] not in ("edges", "degree"):
        raise ConfigError("observables.clt must be edges or degree")
    if cfg["stein"]["blocks"] < 2:
        raise ConfigError("stein.blocks must be at least 2")
    m = cfg["model"]
    if len(m["motifs"]) != len(m["beta"]):
        raise ConfigError("model.motifs and model.beta differ in length")
    if not all(isinstance(b, _NUM) and not isinstance(b, bool) for b in m["beta"]):
        raise ConfigError("model.beta must hold numbers")
    if not all(isinstance(s, str) for s in m["motifs"]):
        raise ConfigError("model.motifs must hold motif names")
    try:
        build_spec(cfg)
    except ValueError as exc:
        raise ConfigError(f"invalid model: {exc}") from exc


def load(path: Optional[str]) -> dict:
    if path is None:
        return validate({})
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return validate(raw)


def apply_overrides(cfg: dict, **flags) -> dict:
    """Command-line values replace file values when given (not ``None``)."""
    out = copy.deepcopy(cfg)
    for k, v in flags.items():
        if v is None:
            continue
        if "." in k:
            table, key = k.split(".", 1)
            out[table][key] = v
        else:
            out[k] = v
    _semantic_checks(out)
    return out


def build_spec(cfg: dict) -> ErgmSpec:
    return ErgmSpec.build(cfg["model"]["motifs"], cfg["model"]["beta"])


def dumps(cfg: dict) -> str:
    return json.dumps(cfg, indent=2, sort_keys=True)


@dataclass
class ExperimentConfig:
    """Resolved configuration plus the model it describes."""

    data: dict = field(default_factory=defaults)

    @classmethod
    def from_file(cls, path: Optional[str], **flags) -> "ExperimentConfig":
        return cls(apply_overrides(load(path), **flags))

    @property
    def spec(self) -> ErgmSpec:
        return build_spec(self.data)

    def __getitem__(self, key):
        return self.data[key]

    def to_dict(self) -> dict:
        return copy.deepcopy(self.data)
