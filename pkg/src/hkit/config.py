"""JSON run configurations: schema, loading with line-precise errors, and problem building."""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

import jsonschema
import numpy as np

from .expressions import ExpressionError, parse_nonlinearity
from .lp_space import GRID_RULES, make_grid
from .operators import HammersteinProblem, IntegralKernel
from .oracle import GalleryProblem, gallery_names, get_problem

KERNEL_TYPES = ("min", "identity", "constant", "gaussian", "zero")

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["problem"],
    "properties": {
        "problem": {
            "oneOf": [
                {"type": "string", "enum": gallery_names()},
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["nonlinearity", "kernel"],
                    "properties": {
                        "nonlinearity": {"type": "string", "minLength": 1},
                        "kernel": {
                            "type": "object",
                            "additionalProperties": False,
                            "required": ["type"],
                            "properties": {
                                "type": {"enum": list(KERNEL_TYPES)},
                                "scale": {"type": "number"},
                                "width": {"type": "number", "exclusiveMinimum": 0},
                            },
                        },
                        "domain": {
                            "type": "array",
                            "items": {"type": "number"},
                            "minItems": 2,
                            "maxItems": 2,
                        },
                    },
                },
            ]
        },
        "p": {"type": "number", "exclusiveMinimum": 1},
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "rule": {"enum": sorted(GRID_RULES)},
                "n": {"type": "integer", "minimum": 2},
            },
        },
        "schedule": {
            "type": "object",
            "additionalProperties": False,
            "required": ["a", "b"],
            "properties": {"a": {"type": "number"}, "b": {"type": "number"}},
        },
        "max_iter": {"type": "integer", "minimum": 1},
        "residual_tol": {"type": "number", "exclusiveMinimum": 0},
        "variant": {"enum": ["general_p", "chidume_idu_p2"]},
        "record_every": {"type": "integer", "minimum": 1},
        "track_path": {"type": "boolean"},
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "trace_csv": {"type": "string", "minLength": 1},
                "summary_json": {"type": "string", "minLength": 1},
            },
        },
        "seed": {"type": "integer", "minimum": 0},
    },
}

DEFAULTS = {
    "p": 2.0,
    "grid": {"rule": "trapezoid", "n": 33},
    "schedule": {"a": 0.6, "b": 0.3},
    "max_iter": 100_000,
    "residual_tol": 1e-3,
    "variant": "general_p",
    "record_every": 100,
    "track_path": False,
    "output": {},
    "seed": 0,
}


class ConfigError(ValueError):
    """A configuration file is unreadable, malformed or fails the schema.

    The message starts with ``<file>:<line>:`` when the location is known.
    """

    def __init__(self, message, line=None, source=None):
        prefix = ""
        if source is not None:
            prefix = f"{source}:{line}: " if line is not None else f"{source}: "
        super().__init__(prefix + message)
        self.line = line


def locate(text: str, path) -> int | None:
    """Best-effort 1-based line of the value at a JSON ``path`` (keys and indices)."""
    offset, found = 0, None
    for key in path:
        if isinstance(key, int):
            break
        match = re.compile(r'"%s"\s*:' % re.escape(str(key))).search(text, offset)
        if match is None:
            break
        offset, found = match.start(), match.start()
    if found is None:
        return 1
    return text.count("\n", 0, found) + 1


def _merge(config: dict) -> dict:
    merged = {key: (dict(value) if isinstance(value, dict) else value) for key, value in DEFAULTS.items()}
    for key, value in config.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key].update(value)
        else:
            merged[key] = value
    return merged


@dataclass
class LoadedConfig:
    data: dict
    text: str
    source: str

    def line_of(self, *path) -> int | None:
        return locate(self.text, path)


def load_config_text(text: str, source: str = "<config>") -> LoadedConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg} (column {exc.colno})", exc.lineno, source) from None
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: (len(e.absolute_path), list(map(str, e.absolute_path))))
    if errors:
        error = errors[0]
        path = list(error.absolute_path)
        where = "/".join(map(str, path)) or "<root>"
        raise ConfigError(f"{where}: {error.message}", locate(text, path), source)
    return LoadedConfig(_merge(raw), text, source)


def load_config(path) -> LoadedConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", None, str(path)) from None
    return load_config_text(text, str(path))


def build_kernel(entry: dict) -> IntegralKernel:
    kind = entry["type"]
    scale = float(entry.get("scale", 1.0))
    if kind == "identity":
        return IntegralKernel.identity(scale)
    if kind == "zero":
        return IntegralKernel.zero()
    if kind == "min":
        return IntegralKernel(lambda x, y: scale * np.minimum(x, y), symmetric=True, psd_claimed=scale >= 0, name="min")
    if kind == "constant":
        return IntegralKernel(lambda x, y: scale + 0.0 * (x + y), symmetric=True, psd_claimed=scale >= 0, name="constant")
    width = float(entry.get("width", 1.0))
    return IntegralKernel(
        lambda x, y: scale * np.exp(-((x - y) ** 2) / width**2), symmetric=True, psd_claimed=scale >= 0, name="gaussian"
    )


def build_problem(loaded: LoadedConfig):
    """Return ``(problem, is_gallery)`` with the config's exponent applied."""
    data = loaded.data
    entry = data["problem"]
    p = float(data["p"])
    if isinstance(entry, str):
        base = get_problem(entry)
        problem = GalleryProblem(
            base.nonlinearity, base.kernel, p, base.domain, base.known_solution,
            base.name, base.notes, base.strongly_monotone,
        )
        return problem, True
    try:
        nonlinearity = parse_nonlinearity(entry["nonlinearity"])
    except ExpressionError as exc:
        raise ConfigError(f"problem/nonlinearity: {exc}", loaded.line_of("problem", "nonlinearity"), loaded.source) from None
    domain = tuple(entry.get("domain", (0.0, 1.0)))
    if not domain[0] < domain[1]:
        raise ConfigError("problem/domain: need a < b", loaded.line_of("problem", "domain"), loaded.source)
    try:
        kernel = build_kernel(entry["kernel"])
    except ValueError as exc:
        raise ConfigError(f"problem/kernel: {exc}", loaded.line_of("problem", "kernel"), loaded.source) from None
    return HammersteinProblem(nonlinearity, kernel, p, domain), False


def build_grid(loaded: LoadedConfig, problem):
    grid = loaded.data["grid"]
    return make_grid(grid["rule"], int(grid["n"]), problem.domain)
