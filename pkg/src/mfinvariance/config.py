"""Scenario configuration: defaults, presets, dot-path overrides and validation."""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from importlib import resources

import jsonschema

from .errors import ConfigError
from .fields import FieldModel
from .hprofile import KINDS, HurstProfile
from .kernels import ASYMPT_KINDS, AsymptoticCovariance

PRESETS = ("fwn-constant", "fwn-sine", "farima-sine", "farima-asymmetry")
OUTPUT_ENV = "MFINVARIANCE_OUTPUT_DIR"

DEFAULTS = {
    "name": "scenario",
    "asympt": None,
    "N_ladder": [64, 256, 1024, 4096],
    "time_grid": [0.25, 0.5, 0.75, 1.0],
    "eps_ladder": [2.0 ** -k for k in range(2, 9)],
    "tangent": {"base_points": [1.0], "lags": [[1.0, 1.0], [1.0, 0.5], [1.0, -1.0]],
                "distinct_pairs": [[1.0, 2.0]]},
    "oracle": {"N": 8192, "M": 4, "times": [0.25, 0.5, 0.75, 1.0]},
    "holder": {"t0": [0.5, 1.0], "window": 0.1, "cells": 64},
    "representation": {"t": 1.0, "s": 1.0, "dH": 1e-3, "grid_step": 1.0 / 512, "refinements": 3},
    "renorm": {"fixed_N": [2, 4, 8], "conv_N": [4, 16, 64],
               "hurst_pairs": [[0.7, 0.7], [0.6, 0.8], [0.8, 0.6]]},
    "sample": {"N": 64, "times": [0.25, 0.5, 0.75, 1.0]},
    "kernels": {"hurst_pairs": [[0.7, 0.7], [0.6, 0.8], [0.8, 0.6]]},
    "replicates": 1000,
    "seed": 20240611,
    "threads": 1,
    "tolerances": {
        "invariance": 0.05, "oracle": 1e-3, "tangent_distinct": 1e-2, "tangent_exact": 1e-7,
        "holder": 0.07, "representation": 1e-2, "renorm_fixed": 1e-10, "factor": 1e-9,
        "constants": 1e-8,
    },
    "quadrature": {"rel_tol": 1e-8, "max_panels": 10000},
    "output_dir": "out",
}

_num = {"type": "number"}
_pos_int = {"type": "integer", "minimum": 1}
_hurst = {"type": "number", "exclusiveMinimum": 0.5, "exclusiveMaximum": 1.0}
_times = {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1}
_pairs = {"type": "array", "items": {"type": "array", "items": _hurst, "minItems": 2, "maxItems": 2}}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["model", "profile"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "model": {"type": "object", "required": ["kind"], "additionalProperties": False,
                  "properties": {"kind": {"enum": ["fwn", "farima"]}}},
        "profile": {"type": "object", "required": ["kind"], "additionalProperties": False,
                    "properties": {"kind": {"enum": list(KINDS)}, "params": {"type": "object"},
                                   "a": {"oneOf": [_hurst, {"type": "null"}]},
                                   "b": {"oneOf": [_hurst, {"type": "null"}]}}},
        "asympt": {"oneOf": [{"type": "null"}, {
            "type": "object", "required": ["kind"],
            "properties": {"kind": {"enum": list(ASYMPT_KINDS)}, "value": _num,
                           "h1_grid": {"type": "array"}, "h2_grid": {"type": "array"},
                           "table": {"type": "array"}}}]},
        "N_ladder": {"type": "array", "items": _pos_int, "minItems": 1},
        "time_grid": _times,
        "eps_ladder": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 2},
        "tangent": {"type": "object", "additionalProperties": False, "properties": {
            "base_points": _times,
            "lags": {"type": "array", "items": {"type": "array", "items": _num, "minItems": 2, "maxItems": 2}},
            "distinct_pairs": {"type": "array", "items": {"type": "array", "items": {"type": "number", "minimum": 0},
                                                          "minItems": 2, "maxItems": 2}}}},
        "oracle": {"type": "object", "additionalProperties": False, "properties": {
            "N": _pos_int, "M": _pos_int, "times": _times}},
        "holder": {"type": "object", "additionalProperties": False, "properties": {
            "t0": _times, "window": {"type": "number", "exclusiveMinimum": 0, "maximum": 0.1},
            "cells": {"type": "integer", "minimum": 16}}},
        "representation": {"type": "object", "additionalProperties": False, "properties": {
            "t": {"type": "number", "minimum": 0}, "s": {"type": "number", "minimum": 0},
            "dH": {"type": "number", "exclusiveMinimum": 0}, "grid_step": {"type": "number", "exclusiveMinimum": 0},
            "refinements": {"type": "integer", "minimum": 2}}},
        "renorm": {"type": "object", "additionalProperties": False, "properties": {
            "fixed_N": {"type": "array", "items": _pos_int}, "conv_N": {"type": "array", "items": _pos_int},
            "hurst_pairs": _pairs}},
        "sample": {"type": "object", "additionalProperties": False, "properties": {
            "N": _pos_int, "times": _times}},
        "kernels": {"type": "object", "additionalProperties": False, "properties": {"hurst_pairs": _pairs}},
        "replicates": _pos_int,
        "seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
        "threads": _pos_int,
        "tolerances": {"type": "object", "additionalProperties": {"type": "number", "exclusiveMinimum": 0}},
        "quadrature": {"type": "object", "additionalProperties": False, "properties": {
            "rel_tol": {"type": "number", "exclusiveMinimum": 0, "maximum": 1e-2},
            "max_panels": _pos_int}},
        "output_dir": {"type": "string"},
    },
}


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def load_preset(name: str) -> dict:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}", "preset")
    text = resources.files("mfinvariance").joinpath("presets", f"{name}.json").read_text()
    return json.loads(text)


def load_file(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}", "") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}", "") from exc


def apply_override(cfg: dict, assignment: str) -> dict:
    """Apply ``dot.path=value``; the value is parsed as JSON, else taken as a string."""
    if "=" not in assignment:
        raise ConfigError(f"override {assignment!r} must look like dot.path=value", assignment)
    path, raw = assignment.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    keys = path.strip().split(".")
    node = cfg
    for k in keys[:-1]:
        if node.get(k) is None:
            node[k] = {}
        node = node[k]
        if not isinstance(node, dict):
            raise ConfigError(f"cannot set {path}: {k} is not an object", path)
    node[keys[-1]] = value
    return cfg


def _describe(err: jsonschema.ValidationError) -> str:
    path = ".".join(str(p) for p in err.absolute_path) or "<root>"
    if err.validator in ("exclusiveMinimum", "exclusiveMaximum") and err.schema is _hurst:
        return f"{path}: {err.instance!r} violates the constraint 1/2 < H < 1 (open interval (1/2, 1))"
    if err.validator == "oneOf" and isinstance(err.instance, (int, float)):
        return f"{path}: {err.instance!r} violates the constraint 1/2 < H < 1 (open interval (1/2, 1))"
    return f"{path}: {err.message}"


@dataclass(frozen=True)
class ScenarioConfig:
    """A validated scenario; ``raw`` holds the full merged JSON document."""

    raw: dict

    @classmethod
    def build(cls, user: dict, overrides=(), output_env: str | None = None) -> "ScenarioConfig":
        cfg = _merge(DEFAULTS, user)
        for o in overrides:
            apply_override(cfg, o)
        if output_env:
            cfg["output_dir"] = output_env
        validator = jsonschema.Draft202012Validator(SCHEMA)
        errors = sorted(validator.iter_errors(cfg), key=lambda e: list(map(str, e.absolute_path)))
        if errors:
            e = errors[0]
            raise ConfigError(_describe(e), ".".join(str(p) for p in e.absolute_path))
        for key in ("time_grid",):
            if any(b <= a for a, b in zip(cfg[key], cfg[key][1:])):
                raise ConfigError(f"{key}: times must be strictly increasing", key)
        if any(b <= a for a, b in zip(cfg["N_ladder"], cfg["N_ladder"][1:])):
            raise ConfigError("N_ladder: must be strictly increasing", "N_ladder")
        if any(b >= a for a, b in zip(cfg["eps_ladder"], cfg["eps_ladder"][1:])):
            raise ConfigError("eps_ladder: must be strictly decreasing", "eps_ladder")
        conf = cls(cfg)
        try:
            conf.profile, conf.asympt
        except ConfigError:
            raise
        except (ValueError, KeyError, TypeError) as exc:
            raise ConfigError(f"profile/asympt: {exc}", "profile") from exc
        return conf

    def __getitem__(self, key):
        return self.raw[key]

    @property
    def name(self) -> str:
        return self.raw["name"]

    @property
    def profile(self) -> HurstProfile:
        return HurstProfile.from_dict(self.raw["profile"])

    @property
    def model(self) -> FieldModel:
        p = self.profile
        return FieldModel(self.raw["model"]["kind"], p.a, p.b)

    @property
    def asympt(self) -> AsymptoticCovariance:
        a = self.raw.get("asympt")
        if a is None:
            return self.model.asympt
        return AsymptoticCovariance.from_dict(a)

    def tol(self, key: str) -> float:
        return float(self.raw["tolerances"].get(key, DEFAULTS["tolerances"].get(key)))

    def to_json(self) -> str:
        return json.dumps(self.raw, sort_keys=True, indent=2) + "\n"
