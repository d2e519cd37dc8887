"""
Flat ``key = value`` configuration files.

One setting per line, ``#`` starts a comment, lists are comma separated::

    benchmark = branin
    rounds = 50
    start_counts = 1, 10, 100, 1000

Files map onto the flat dataclasses :class:`acqregret.bo.BoConfig` and
:class:`acqregret.regret.ExperimentConfig`; unknown keys are rejected.
"""

from __future__ import annotations

import dataclasses
import os
import typing

import numpy as np

from .exceptions import ConfigError

__all__ = ["read_config", "parse_config", "format_config", "from_mapping", "to_mapping",
           "derive_seed"]

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def parse_config(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        out[key.strip()] = value.strip()
    return out


def read_config(path) -> dict:
    if not os.path.isfile(path):
        raise ConfigError(f"config file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def _format_value(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (tuple, list)):
        return ", ".join(_format_value(x) for x in v)
    return str(v)


def format_config(mapping: dict, header: str = "") -> str:
    lines = [f"# {h}" for h in header.splitlines()] if header else []
    lines += [f"{k} = {_format_value(v)}" for k, v in mapping.items()]
    return "\n".join(lines) + "\n"


def _coerce(name, hint, raw):
    if not isinstance(raw, str):
        return raw
    s = raw.strip()
    origin = typing.get_origin(hint)
    args = typing.get_args(hint)
    try:
        if origin is typing.Union or (origin is not None and type(None) in args):
            if s.lower() in ("none", "fitted", ""):
                return None
            inner = [a for a in args if a is not type(None)][0]
            return _coerce(name, inner, s)
        if hint is bool:
            if s.lower() in _TRUE:
                return True
            if s.lower() in _FALSE:
                return False
            raise ValueError(s)
        if hint is int:
            return int(s)
        if hint is float:
            return float(s)
        if hint in (tuple, list) or origin in (tuple, list):
            return tuple(int(v) for v in s.split(",") if v.strip())
        return s
    except ValueError:
        raise ConfigError(f"bad value for {name}: {raw!r}") from None


def from_mapping(cls, mapping: dict):
    """Build dataclass ``cls`` from string-valued settings."""
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(mapping) - names)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    kwargs = {k: _coerce(k, hints[k], v) for k, v in mapping.items()}
    return cls(**kwargs)


def to_mapping(obj) -> dict:
    return {f.name: getattr(obj, f.name) for f in dataclasses.fields(obj)}


def derive_seed(*keys) -> int:
    """Deterministic 63-bit seed from a tuple of nonnegative integers."""
    # the key count goes first: SeedSequence ignores trailing zeros, which
    # would make (s,) and (s, 0) collide
    entropy = [len(keys)] + [int(k) for k in keys]
    state = np.random.SeedSequence(entropy).generate_state(2, dtype=np.uint32)
    return int(state[0]) << 31 | int(state[1]) >> 1
