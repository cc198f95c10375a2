"""Check records shared by every verifier."""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Any

PASS = "pass"
FAIL = "fail"
VACUOUS = "vacuous"


@dataclass
class Check:
    name: str
    status: str
    witness: tuple | None = None
    detail: str = ""

    def __post_init__(self):
        if self.witness is not None:
            self.witness = tuple(_plain(list(self.witness)))

    @property
    def failed(self) -> bool:
        return self.status == FAIL

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "status": self.status,
            "witness": _jsonable(self.witness),
            "detail": self.detail,
        }


@dataclass
class Report:
    checks: list[Check] = field(default_factory=list)

    def add(self, name: str, status: str, witness=None, detail: str = "") -> Check:
        check = Check(name, status, witness, detail)
        self.checks.append(check)
        return check

    def extend(self, other: "Report", prefix: str = "") -> "Report":
        for c in other.checks:
            self.checks.append(Check(prefix + c.name, c.status, c.witness, c.detail))
        return self

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def __contains__(self, name: str) -> bool:
        return any(c.name == name for c in self.checks)

    @property
    def passed(self) -> bool:
        return not any(c.failed for c in self.checks)

    @property
    def failures(self) -> list[Check]:
        return [c for c in self.checks if c.failed]

    def to_dict(self) -> dict[str, Any]:
        return {"passed": self.passed, "checks": [c.to_dict() for c in self.checks]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False)


def _plain(obj):
    """numpy scalars and arrays to built-in Python values."""
    if isinstance(obj, (list, tuple)):
        return [_plain(o) for o in obj]
    if hasattr(obj, "tolist"):
        return _plain(obj.tolist())
    return obj


def _jsonable(obj):
    if obj is None:
        return None
    if isinstance(obj, (list, tuple)):
        return [_jsonable(o) for o in obj]
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else repr(obj)
    if hasattr(obj, "item"):
        return _jsonable(obj.item())
    return obj


def max_workers() -> int | None:
    """Thread cap from ``QUASIFIX_THREADS`` (unset or 0 means automatic)."""
    raw = os.environ.get("QUASIFIX_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        return None
    return n if n > 0 else None
