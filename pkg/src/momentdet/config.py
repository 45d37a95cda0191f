"""Run configuration: one static JSON file plus command-line overrides.

The file named by ``MOMENTDET_CONFIG`` may set any field of :class:`RunConfig`;
verdict thresholds live under ``"verdict"``. Every report embeds the full
snapshot so a run can be reproduced from the report alone.
"""
from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, Dict, Optional

from .exact import DEFAULT_PRECISION
from .mpmulti import GRAM_TOL
from .realize import DEFAULT_BUDGET
from .verdict import VerdictConfig

ENV_VAR = "MOMENTDET_CONFIG"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    precision: int = DEFAULT_PRECISION
    window: int = 64
    mode: Optional[str] = None          # None: the input's native mode
    multi_window: int = 3
    realize_window: int = 4
    bump_verdict_window: int = 512
    bump_samples: int = 201
    budget: int = DEFAULT_BUDGET
    gram_tolerance: float = GRAM_TOL
    verdict: VerdictConfig = field(default_factory=VerdictConfig)

    def to_dict(self) -> Dict[str, Any]:
        out = asdict(self)
        out["verdict"] = self.verdict.to_dict()
        return out

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        d = dict(d)
        v = d.pop("verdict", None)
        if v is not None:
            vknown = {f.name for f in fields(VerdictConfig)}
            if set(v) - vknown:
                raise ConfigError(f"unknown verdict keys: {sorted(set(v) - vknown)}")
            d["verdict"] = VerdictConfig(**v)
        cfg = cls(**d)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.mode not in (None, "rational", "float"):
            raise ConfigError(f"mode must be rational or float, not {self.mode!r}")
        if self.precision < 53:
            raise ConfigError("precision must be at least 53 bits")
        for name in ("window", "multi_window", "realize_window", "bump_verdict_window", "budget"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")

    def override(self, **kw) -> "RunConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        cfg = replace(self, **kw)
        cfg.validate()
        return cfg


def load_config(path: Optional[str] = None) -> RunConfig:
    """Defaults, updated from ``path`` or the file named by ``MOMENTDET_CONFIG``."""
    path = path or os.environ.get(ENV_VAR)
    if not path:
        return RunConfig()
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    return RunConfig.from_dict(data)


__all__ = ["ENV_VAR", "ConfigError", "RunConfig", "load_config"]
