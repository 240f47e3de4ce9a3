"""Run-wide defaults: enumeration budget, precision, truncation caps and seeds."""

from __future__ import annotations

import json
import os
import sys
from dataclasses import asdict, dataclass, fields

from .errors import InvalidInput

SCHEMA_VERSION = 1
BUDGET_ENV = "CFTRANSFER_BUDGET"


def default_budget() -> int:
    """Enumeration budget, overridable through the ``CFTRANSFER_BUDGET`` variable."""
    raw = os.environ.get(BUDGET_ENV)
    if raw is None:
        return 10_000_000
    try:
        value = int(raw)
    except ValueError:
        raise InvalidInput(f"{BUDGET_ENV}={raw!r} is not an integer") from None
    if value <= 0:
        raise InvalidInput(f"{BUDGET_ENV} must be positive")
    return value


@dataclass
class RunConfig:
    seed: int = 0
    budget: int = 0  # 0 means "use default_budget()"
    precision_bits: int = 96
    max_precision_bits: int = 1024
    initial_radius: int = 256
    radius_cap: int = 1 << 17
    jobs: int = 1

    def __post_init__(self):
        if self.budget == 0:
            self.budget = default_budget()
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise InvalidInput(f"config field {f.name} must be non-negative")

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_mapping(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InvalidInput(f"unknown config keys: {sorted(unknown)}")
        return cls(**{k: int(v) for k, v in data.items()})


def load_document(path: str) -> dict:
    """Read a JSON or TOML document (chosen by file extension)."""
    try:
        if path.endswith(".toml"):
            if sys.version_info >= (3, 11):
                import tomllib
            else:
                import tomli as tomllib
            with open(path, "rb") as fh:
                return tomllib.load(fh)
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise InvalidInput(f"no such file: {path}") from None
    except (ValueError, UnicodeDecodeError) as exc:
        raise InvalidInput(f"cannot parse {path}: {exc}") from None
