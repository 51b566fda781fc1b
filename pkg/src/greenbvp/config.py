"""Run configuration: JSON schema, defaults and problem construction."""
from __future__ import annotations

import copy
import json
from pathlib import Path

import jsonschema

from .problem import BvpSpec, dirichlet_problem, mixed_problem


class ConfigError(ValueError):
    pass


_NUM = {"type": "number"}
_INT = {"type": "integer"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_PAIR = {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}
_INTS = {"type": "array", "items": {"type": "integer", "minimum": 0}}

_COEFF = {
    "oneOf": [
        _NUM,
        {"type": "object", "required": ["type"], "properties": {
            "type": {"enum": ["const", "poly", "exp", "sum", "prod"]},
            "value": _NUM,
            "coeffs": {"type": "array", "items": _NUM},
            "scale": _NUM, "rate": _NUM,
            "terms": {"type": "array", "items": {"$ref": "#/$defs/coefficient"}},
            "factors": {"type": "array", "items": {"$ref": "#/$defs/coefficient"}},
        }, "additionalProperties": False},
    ]
}

_MATRIX = {"type": "array", "items": {"type": "array", "items": _NUM}}


def _section(props: dict, required=()) -> dict:
    return {"type": "object", "properties": props, "required": list(required), "additionalProperties": False}


SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "$defs": {"coefficient": _COEFF},
    "type": "object",
    "required": ["problem"],
    "additionalProperties": False,
    "properties": {
        "problem": {
            "oneOf": [
                _section({
                    "preset": {"enum": ["mixed", "dirichlet"]},
                    "k": {"type": "integer", "minimum": 0, "maximum": 1},
                    "M": _NUM,
                    "coefficients": {"type": "array", "items": {"$ref": "#/$defs/coefficient"},
                                     "minItems": 2, "maxItems": 2},
                    "name": {"type": "string"},
                }, ["preset"]),
                _section({
                    "n": {"type": "integer", "minimum": 1},
                    "interval": _PAIR,
                    "coefficients": {"type": "array", "items": {"$ref": "#/$defs/coefficient"}},
                    "k": {"type": "integer", "minimum": 0},
                    "M": _NUM,
                    "alpha": _MATRIX,
                    "beta": _MATRIX,
                    "name": {"type": "string"},
                }, ["n", "interval", "coefficients", "k", "alpha", "beta"]),
            ]
        },
        "tol": _POS,
        "threads": {"type": "integer", "minimum": 1},
        "output": _section({"dir": {"type": "string"}, "svg": {"type": "boolean"}}),
        "quadrature": _section({"panels": {"type": "integer", "minimum": 1},
                                "nodes": {"type": "integer", "minimum": 1}}),
        "build": _section({"grid": {"type": "integer", "minimum": 2}, "l": _INTS,
                           "jump_samples": {"type": "integer", "minimum": 1}}),
        "verify": _section({"M0": _NUM, "M1": _NUM, "k0": _INT, "k1": _INT,
                            "grid": {"type": "integer", "minimum": 1}, "l": _INTS, "bound": _POS}),
        "sweep": _section({"M_range": _PAIR, "M_points": {"type": "integer", "minimum": 0},
                           "M": {"type": "array", "items": _NUM}, "l": _INTS,
                           "grid": {"type": "integer", "minimum": 3}, "refine_tol": _POS}),
        "eig": _section({"bracket": _PAIR, "max_count": {"type": "integer", "minimum": 1},
                         "scan_points": {"type": "integer", "minimum": 2}}),
        "h_op": _section({"l": {"type": "integer", "minimum": 0},
                          "m_position": {"enum": ["operator", "literal"]},
                          "samples": {"type": "integer", "minimum": 2},
                          "s": _NUM}),
    },
}

DEFAULTS = {
    "tol": 1e-11,
    "threads": 1,
    "output": {"dir": ".", "svg": False},
    "quadrature": {"panels": 4, "nodes": 16},
    "build": {"grid": 21, "l": [0], "jump_samples": 9},
    "verify": {"grid": 15, "l": [0, 1], "bound": 1e-6},
    "sweep": {"M_points": 120, "l": [0], "grid": 61, "refine_tol": 1e-6},
    "eig": {"max_count": 50, "scan_points": 300},
    "h_op": {"m_position": "operator", "samples": 11},
}


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in over.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def validate(doc) -> dict:
    """Validate against :data:`SCHEMA` and fill defaults."""
    try:
        jsonschema.validate(doc, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"invalid config at {where}: {exc.message}") from None
    return _merge(DEFAULTS, doc)


def load(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    return validate(doc)


def problem_from_config(doc: dict) -> BvpSpec:
    """Build the spec; raises :class:`~greenbvp.problem.SpecError` for inconsistent problems."""
    p = doc["problem"]
    if "preset" in p:
        make = mixed_problem if p["preset"] == "mixed" else dirichlet_problem
        spec = make(float(p.get("M", 0.0)), k=int(p.get("k", 0)), coefficients=p.get("coefficients"))
    else:
        spec = BvpSpec(
            n=int(p["n"]), interval=tuple(p["interval"]), coefficients=tuple(p["coefficients"]),
            k=int(p["k"]), M=float(p.get("M", 0.0)), alpha=p["alpha"], beta=p["beta"],
        )
    return spec
