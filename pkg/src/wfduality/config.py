"""JSON run-configuration schema and parameter construction.

A config names an experiment kind, a seed, replicate and worker counts, and
a parameter bundle.  Measures are written either as atom lists
``{"atoms": [[y, weight], ...]}`` or as named densities
``{"density": "uniform" | "beta", "a": ..., "b": ..., "mass": m,
"nodes": n}``; kernels as ``{"variant": "geometric" | "binary" | "table",
"pmf": {...}, "inf_mass": ...}``.
"""

from __future__ import annotations

import json

import jsonschema
import numpy as np

from .errors import ConfigError
from .measures import FiniteMeasure, SelectionKernel
from .params import FiniteModelParams, LimitParams

EXPERIMENTS = [
    "simulate-x", "simulate-z", "simulate-finite",
    "duality-quenched", "duality-annealed", "duality-moment",
    "thresholds", "fixation", "convergence",
]

_MEASURE_SCHEMA = {
    "type": "object",
    "oneOf": [
        {
            "properties": {
                "atoms": {
                    "type": "array",
                    "items": {
                        "type": "array",
                        "items": {"type": "number"},
                        "minItems": 2,
                        "maxItems": 2,
                    },
                },
            },
            "required": ["atoms"],
            "additionalProperties": False,
        },
        {
            "properties": {
                "density": {"enum": ["uniform", "beta"]},
                "a": {"type": "number", "exclusiveMinimum": 0},
                "b": {"type": "number", "exclusiveMinimum": 0},
                "mass": {"type": "number", "exclusiveMinimum": 0},
                "nodes": {"type": "integer", "minimum": 1},
            },
            "required": ["density", "mass"],
            "additionalProperties": False,
        },
    ],
}

_KERNEL_SCHEMA = {
    "type": "object",
    "properties": {
        "variant": {"enum": ["geometric", "binary", "table"]},
        "pmf": {
            "type": "object",
            "patternProperties": {"^[0-9]+$": {"type": "number"}},
            "additionalProperties": False,
        },
        "inf_mass": {"type": "number", "minimum": 0, "maximum": 1},
    },
    "required": ["variant"],
    "additionalProperties": False,
}

_LIMIT_SCHEMA = {
    "type": "object",
    "properties": {
        "kernel": _KERNEL_SCHEMA,
        "lambda_s": _MEASURE_SCHEMA,
        "w": {"type": "number", "minimum": 0},
        "lambda_c": _MEASURE_SCHEMA,
        "c": {"type": "number", "minimum": 0},
        "sigma": {"type": "number", "minimum": 0},
    },
    "required": ["kernel", "lambda_s", "lambda_c"],
    "additionalProperties": False,
}

_FINITE_SCHEMA = {
    "type": "object",
    "properties": {
        "N": {"type": "integer", "minimum": 2},
        "kernel": _KERNEL_SCHEMA,
        "env_law": _MEASURE_SCHEMA,
        "c_N": {"type": "number", "minimum": 0, "maximum": 1},
        "lambda_c": _MEASURE_SCHEMA,
    },
    "required": ["N", "kernel", "env_law"],
    "additionalProperties": False,
}

SCHEMA = {
    "type": "object",
    "properties": {
        "experiment": {"enum": EXPERIMENTS},
        "seed": {"type": "integer", "minimum": 0},
        "replicates": {"type": "integer", "minimum": 1},
        "workers": {"type": "integer", "minimum": 1},
        "z_threshold": {"type": "number", "exclusiveMinimum": 0},
        "limit": _LIMIT_SCHEMA,
        "finite": _FINITE_SCHEMA,
        "x": {"type": "number", "minimum": 0, "maximum": 1},
        "x0": {"type": "number", "minimum": 0, "maximum": 1},
        "x_grid": {
            "type": "array",
            "items": {"type": "number", "minimum": 0, "maximum": 1},
            "minItems": 1,
        },
        "n": {"type": "integer", "minimum": 0},
        "n0": {"type": "integer", "minimum": 1},
        "t": {"type": "number", "minimum": 0},
        "T": {"type": "number", "minimum": 0},
        "dt": {"type": "number", "exclusiveMinimum": 0},
        "horizon": {"type": "integer", "minimum": 0},
        "generations": {"type": "integer", "minimum": 0},
        "env": {
            "type": "array",
            "items": {"type": "number", "minimum": -1, "maximum": 1},
            "minItems": 1,
        },
        "N_list": {
            "type": "array",
            "items": {"type": "integer", "minimum": 2},
            "minItems": 1,
        },
        "burn_in": {"type": "number", "minimum": 0},
        "T_stat": {"type": "number", "exclusiveMinimum": 0},
        "eps0": {"type": "number", "exclusiveMinimum": 0},
    },
    "required": ["experiment", "seed"],
    "additionalProperties": False,
}


def load_config(path: str) -> dict:
    """Parse and schema-validate a config file."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        jsonschema.validate(raw, SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config schema violation: {exc.message}") from exc
    return raw


def build_kernel(obj: dict) -> SelectionKernel:
    variant = obj["variant"]
    if variant == "geometric":
        return SelectionKernel.geometric()
    if variant == "binary":
        return SelectionKernel.binary()
    pmf = {int(k): float(v) for k, v in obj.get("pmf", {}).items()}
    if not pmf and obj.get("inf_mass", 0.0) < 1.0:
        raise ConfigError("table kernel needs a pmf")
    return SelectionKernel.table(pmf, float(obj.get("inf_mass", 0.0)))


def build_measure(obj: dict, allow_negative: bool = False) -> FiniteMeasure:
    if "atoms" in obj:
        atoms = obj["atoms"]
        locs = np.array([float(y) for y, _ in atoms])
        wts = np.array([float(w) for _, w in atoms])
        return FiniteMeasure(locs, wts, _allow_negative=allow_negative)
    name = obj["density"]
    nodes = int(obj.get("nodes", 256))
    mass = float(obj["mass"])
    if name == "uniform":
        return FiniteMeasure.from_density(lambda y: 1.0, mass, nodes)
    a = float(obj.get("a", 1.0))
    b = float(obj.get("b", 1.0))
    return FiniteMeasure.from_density(
        lambda y: y ** (a - 1.0) * (1.0 - y) ** (b - 1.0), mass, nodes
    )


def build_limit_params(obj: dict) -> LimitParams:
    return LimitParams(
        kernel=build_kernel(obj["kernel"]),
        lambda_s=build_measure(obj["lambda_s"]),
        w=float(obj.get("w", 0.0)),
        lambda_c=build_measure(obj["lambda_c"]),
        c=float(obj.get("c", 0.0)),
        sigma=float(obj.get("sigma", 0.0)),
    )


def build_finite_params(obj: dict) -> FiniteModelParams:
    env = build_measure(obj["env_law"], allow_negative=True)
    return FiniteModelParams(
        N=int(obj["N"]),
        kernel=build_kernel(obj["kernel"]),
        env_law=env,
        c_N=float(obj.get("c_N", 0.0)),
        lambda_c=build_measure(obj["lambda_c"]) if "lambda_c" in obj else None,
    )
