"""Experiment configuration: strict JSON schema, dotted overrides, object builders."""
from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass

import jsonschema

from .errors import ConfigError, ParameterError
from .generators import Generator, search_radius
from .solver import GridConfig, TerminalCondition

EXPERIMENTS = ("envelope-verify", "solve", "squeeze", "counterexample-sqrt",
               "counterexample-strict")

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_posint = {"type": "integer", "minimum": 1}

MODULUS_SCHEMA = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["holder", "linear", "capped_linear"]},
        "K": _pos, "alpha": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "A": _pos, "cap": _pos,
    },
    "required": ["kind", "K", "A"],
    "additionalProperties": False,
}

GENERATOR_SCHEMA = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["zero", "linear_in_z", "abs_z", "power_z", "sqrt_y", "tabulated"]},
        "K": _pos, "alpha": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "B": _pos, "dim": {"type": "integer", "minimum": 1, "maximum": 2},
        "mu": {"type": "array", "items": _num, "minItems": 1},
        "knots": {"type": "array", "items": _num, "minItems": 2},
        "values": {"type": "array", "items": _num, "minItems": 2},
        "modulus": MODULUS_SCHEMA,
    },
    "required": ["kind", "B"],
    "additionalProperties": False,
}

TERMINAL_SCHEMA = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["polynomial", "cosine", "quartic_arbitrage", "constant"]},
        "coefficients": {"type": "array", "items": _num, "minItems": 1},
        "c": _num,
    },
    "required": ["kind"],
    "additionalProperties": False,
}

GRID_SCHEMA = {
    "type": "object",
    "properties": {
        "T": _pos, "num_time_steps": _posint, "domain_half_width": _pos,
        "num_space_points": {"type": "integer", "minimum": 3}, "n_max": _pos,
    },
    "required": ["T", "domain_half_width", "num_space_points", "n_max"],
    "additionalProperties": False,
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "experiment": {"enum": list(EXPERIMENTS)},
        "seed": {"type": "integer", "minimum": 0},
        "generator": GENERATOR_SCHEMA,
        "terminal": TERMINAL_SCHEMA,
        "grid": GRID_SCHEMA,
        "n_ladder": {"type": "array", "items": _pos, "minItems": 1},
        "z_grid": {
            "type": "object",
            "properties": {"lo": _num, "hi": _num, "step": _pos},
            "required": ["lo", "hi", "step"], "additionalProperties": False,
        },
        "iv_ladder": {"type": "array", "items": _pos},
        "lattice_step_h": _pos,
        "c": _num,
        "c_values": {"type": "array", "items": _num, "minItems": 1},
        "num_time_steps": {"type": "integer", "minimum": 2},
        "paths": {
            "type": "object",
            "properties": {"num_paths": _posint, "num_time_steps": _posint},
            "required": ["num_paths"], "additionalProperties": False,
        },
        "pathwise_time": _pos,
        "M0_estimate": _pos,
        "reference": {
            "type": "object",
            "properties": {"y0": _num, "tol": _pos},
            "required": ["y0", "tol"], "additionalProperties": False,
        },
        "output": {
            "type": "object",
            "properties": {"field_time_stride": _posint},
            "additionalProperties": False,
        },
    },
    "required": ["experiment", "seed"],
    "additionalProperties": False,
    "allOf": [
        {"if": {"properties": {"experiment": {"const": "envelope-verify"}}},
         "then": {"required": ["generator", "n_ladder", "z_grid"]}},
        {"if": {"properties": {"experiment": {"const": "solve"}}},
         "then": {"required": ["generator", "terminal", "grid"]}},
        {"if": {"properties": {"experiment": {"const": "squeeze"}}},
         "then": {"required": ["generator", "terminal", "grid", "n_ladder"]}},
        {"if": {"properties": {"experiment": {"const": "counterexample-sqrt"}}},
         "then": {"required": ["c_values", "num_time_steps"]}},
        {"if": {"properties": {"experiment": {"const": "counterexample-strict"}}},
         "then": {"required": ["c", "grid", "paths"]}},
    ],
}


def _pointer(path):
    return "/" + "/".join(str(p) for p in path) if path else "/"


def validate_schema(raw):
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        raise ConfigError(e.message, _pointer(e.absolute_path))


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(raw, overrides):
    """Apply ``key.sub=value`` overrides; values are parsed as JSON when possible."""
    raw = copy.deepcopy(raw)
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, text = item.split("=", 1)
        parts = key.split(".")
        node = raw
        for p in parts[:-1]:
            if isinstance(node, list):
                node = node[int(p)]
            else:
                node = node.setdefault(p, {})
        last = parts[-1]
        if isinstance(node, list):
            node[int(last)] = _parse_value(text)
        else:
            node[last] = _parse_value(text)
    return raw


def config_hash(raw):
    canon = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


@dataclass
class ExperimentConfig:
    raw: dict

    @property
    def experiment(self):
        return self.raw["experiment"]

    @property
    def seed(self):
        return int(self.raw["seed"])

    def generator(self):
        d = self.raw["generator"]
        try:
            return Generator.from_dict(d)
        except (ParameterError, KeyError) as exc:
            raise ConfigError(str(exc), "/generator") from exc

    def terminal(self):
        try:
            return TerminalCondition.from_dict(self.raw["terminal"])
        except (ParameterError, KeyError) as exc:
            raise ConfigError(str(exc), "/terminal") from exc

    def grid(self, even_steps=False):
        d = self.raw["grid"]
        if "num_time_steps" in d:
            grid = GridConfig(d["T"], d["num_time_steps"], d["domain_half_width"],
                              d["num_space_points"], d["n_max"])
        else:
            grid = GridConfig.fitted(d["T"], d["domain_half_width"], d["num_space_points"],
                                     d["n_max"])
            if even_steps and grid.num_time_steps % 2:
                grid = GridConfig(grid.T, grid.num_time_steps + 1, grid.domain_half_width,
                                  grid.num_space_points, grid.n_max)
        return grid.validate()


def load_config(path, overrides=(), seed=None):
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from exc
    return build_config(raw, overrides, seed)


def build_config(raw, overrides=(), seed=None):
    raw = apply_overrides(raw, overrides)
    if seed is not None:
        raw["seed"] = int(seed)
    validate_schema(raw)
    cfg = ExperimentConfig(raw)
    _check_semantics(cfg)
    return cfg


def _check_semantics(cfg):
    raw = cfg.raw
    if "generator" in raw:
        g = cfg.generator()
        if "n_ladder" in raw:
            ladder = raw["n_ladder"]
            for i, n in enumerate(ladder):
                try:
                    search_radius(g, n)
                except ParameterError as exc:
                    raise ConfigError(str(exc), f"/n_ladder/{i}") from exc
            if any(b <= a for a, b in zip(ladder, ladder[1:])):
                raise ConfigError("n_ladder must be strictly increasing", "/n_ladder")
        if g.y_dependent and cfg.experiment in ("squeeze", "envelope-verify", "solve"):
            raise ConfigError(
                "sqrt_y depends on y; uniqueness needs a z-only driver, "
                "use the counterexample-sqrt experiment", "/generator/kind")
    if "terminal" in raw:
        cfg.terminal()
    if "grid" in raw:
        cfg.grid(even_steps=cfg.experiment == "squeeze")
    if cfg.experiment == "counterexample-sqrt":
        for i, c in enumerate(raw["c_values"]):
            if not 0 <= c <= 1:
                raise ConfigError("c must lie in [0, 1]", f"/c_values/{i}")
    if "z_grid" in raw and raw["z_grid"]["hi"] <= raw["z_grid"]["lo"]:
        raise ConfigError("hi must exceed lo", "/z_grid/hi")
