"""Strictly validated JSON problem files.

Sections::

    {"problem":  {"f": "<expr in t,u>", "M": 5},
     "bracket":  {"alpha": "<expr in t>", "beta": "<expr in t>"},
     "linear":   {"sigma": "<expr in t>", "M": 1, "mu": 0, "lambda": 0, "exact": "<expr>"},
     "verify":   {"u": "<expr>", "omega": "<expr>", "M": 1, "mu": 0, "lambda": 0},
     "numerics": {"n": 2048, "abs_tol": 1e-10, "rel_tol": 1e-8, "max_iter": 200}}

Exactly one of ``problem`` / ``linear`` is allowed; ``verify`` may stand
alone. Unknown keys are rejected.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from .expr import ExprError, Field

SCHEMA = {
    "problem": {"f": "expr2", "M": "real"},
    "bracket": {"alpha": "expr1", "beta": "expr1"},
    "linear": {"sigma": "expr1", "M": "real", "mu": "real?", "lambda": "real?", "exact": "expr1?"},
    "verify": {"u": "expr1", "omega": "expr1?", "M": "real", "mu": "real?", "lambda": "real?"},
    "numerics": {"n": "int?", "abs_tol": "real?", "rel_tol": "real?", "max_iter": "int?"},
}


class ConfigError(ValueError):
    pass


def _convert(key, kind, value):
    base = kind.rstrip("?")
    if base in ("expr1", "expr2"):
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            value = repr(value)
        if not isinstance(value, str):
            raise ConfigError(f"{key}: expected an expression string")
        try:
            return Field(value, ("t",) if base == "expr1" else ("t", "u"))
        except ExprError as err:
            raise ConfigError(f"{key}: {err}") from None
    if base == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{key}: expected an integer")
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(f"{key}: expected a finite number")
    return float(value)


@dataclass
class ProblemConfig:
    sections: dict
    source: str = "<config>"

    def get(self, section, key, default=None):
        return self.sections.get(section, {}).get(key, default)

    def has(self, section) -> bool:
        return section in self.sections

    def require(self, section):
        if section not in self.sections:
            raise ConfigError(f"{section}: required section missing")
        return self.sections[section]


def parse_config(data, source="<config>") -> ProblemConfig:
    if not isinstance(data, dict):
        raise ConfigError("top level must be an object")
    sections = {}
    for name, body in data.items():
        if name not in SCHEMA:
            raise ConfigError(f"{name}: unknown section (expected one of {', '.join(SCHEMA)})")
        if not isinstance(body, dict):
            raise ConfigError(f"{name}: expected an object")
        fields = SCHEMA[name]
        for key in body:
            if key not in fields:
                raise ConfigError(f"{name}.{key}: unknown key (expected one of {', '.join(fields)})")
        parsed = {}
        for key, kind in fields.items():
            if key not in body:
                if not kind.endswith("?"):
                    raise ConfigError(f"{name}.{key}: required")
                continue
            parsed[key] = _convert(f"{name}.{key}", kind, body[key])
        sections[name] = parsed
    if "problem" in sections and "linear" in sections:
        raise ConfigError("problem/linear: give exactly one of the two sections")
    for section in ("problem", "linear", "verify"):
        if section in sections and not sections[section]["M"] > 0:
            raise ConfigError(f"{section}.M: must be > 0 (got {sections[section]['M']:g})")
    numerics = sections.get("numerics", {})
    n = numerics.get("n")
    if n is not None and (n < 16 or n % 2):
        raise ConfigError(f"numerics.n: must be an even integer >= 16 (got {n})")
    for key in ("abs_tol", "rel_tol"):
        if key in numerics and not numerics[key] > 0:
            raise ConfigError(f"numerics.{key}: must be > 0")
    if numerics.get("max_iter", 1) < 1:
        raise ConfigError("numerics.max_iter: must be >= 1")
    return ProblemConfig(sections, source)


def load_config(path) -> ProblemConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as err:
        raise ConfigError(f"{path}: {err.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"{path}: invalid JSON at line {err.lineno} column {err.colno}: {err.msg}") from None
    return parse_config(data, str(path))
