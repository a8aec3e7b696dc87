"""Service configuration: one JSON file, overridable via environment."""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

_ENV_PREFIX = "FLOWFORGE_"


@dataclass
class ServiceConfig:
    port: int = 8040
    spill_dir: str = ""
    memory_budget_bytes: int = 256 * 1024 * 1024
    default_workers: int = 4
    flow_dir: str = ""
    ui_dir: str = ""  # when set, served under /ui

    def __post_init__(self):
        if not self.spill_dir:
            self.spill_dir = str(Path(tempfile.gettempdir()) / "flowforge-spill")
        if not self.flow_dir:
            self.flow_dir = str(Path(tempfile.gettempdir()) / "flowforge-flows")


def load_config(path: str | None = None) -> ServiceConfig:
    """File values first, then FLOWFORGE_* environment overrides."""
    values: dict = {}
    if path:
        values.update(json.loads(Path(path).read_text(encoding="utf-8")))
    known = {
        "port": int,
        "spill_dir": str,
        "memory_budget_bytes": int,
        "default_workers": int,
        "flow_dir": str,
        "ui_dir": str,
    }
    for key, cast in known.items():
        env = os.environ.get(_ENV_PREFIX + key.upper())
        if env is not None:
            values[key] = cast(env)
    unknown = set(values) - set(known)
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return ServiceConfig(**values)
