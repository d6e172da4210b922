"""Service/engine configuration: flags > environment > TOML file."""

from __future__ import annotations

import os

try:
    import tomllib
except ImportError:  # Python 3.10
    import tomli as tomllib
from dataclasses import dataclass
from typing import Optional

from .engine import Limits

ENV_PREFIX = "RWLAB_"

_KEYS = {
    "host": str,
    "port": int,
    "session_dir": str,
    "micro_steps": int,
    "ac_assignments": int,
    "nodes": int,
    "trusted_default": bool,
}


@dataclass
class Config:
    host: str = "127.0.0.1"
    port: int = 8990
    session_dir: str = "rwlab-sessions"
    micro_steps: int = 100_000
    ac_assignments: int = 10_000
    nodes: int = 10_000
    trusted_default: bool = True

    def limits(self) -> Limits:
        return Limits(self.micro_steps, self.ac_assignments, self.nodes)


def _coerce(kind, raw):
    if kind is bool:
        if isinstance(raw, bool):
            return raw
        return str(raw).lower() in ("1", "true", "yes", "on")
    return kind(raw)


def load_config(path: Optional[str] = None, overrides: Optional[dict] = None
                ) -> Config:
    cfg = Config()
    if path is None and os.path.exists("rwlab.toml"):
        path = "rwlab.toml"
    if path is not None and os.path.exists(path):
        with open(path, "rb") as f:
            data = tomllib.load(f)
        for key, kind in _KEYS.items():
            if key in data:
                setattr(cfg, key, _coerce(kind, data[key]))
    for key, kind in _KEYS.items():
        raw = os.environ.get(ENV_PREFIX + key.upper())
        if raw is not None:
            setattr(cfg, key, _coerce(kind, raw))
    for key, value in (overrides or {}).items():
        if value is not None and key in _KEYS:
            setattr(cfg, key, _coerce(_KEYS[key], value))
    return cfg
