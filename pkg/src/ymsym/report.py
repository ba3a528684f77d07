"""JSON reports with a flat check list and bit-exact number encoding."""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from fractions import Fraction
from typing import Any

import numpy as np

from . import __version__

PASS, FAIL, MEASURED, EXPECTED_FAIL = "PASS", "FAIL", "MEASURED", "EXPECTED_FAIL"
# keys that legitimately differ between identical runs
VOLATILE_KEYS = ("timestamp", "timing")


def encode(value: Any) -> Any:
    """Floats become 17-significant-digit strings; arrays become nested lists."""
    if isinstance(value, (bool, np.bool_)) or value is None or isinstance(value, str):
        return bool(value) if isinstance(value, np.bool_) else value
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    if isinstance(value, (complex, np.complexfloating)):
        return [encode(value.real), encode(value.imag)]
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, np.ndarray):
        return [encode(v) for v in value] if value.ndim else encode(value.item())
    if isinstance(value, dict):
        return {str(k): encode(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [encode(v) for v in value]
    raise TypeError(f"cannot encode {type(value).__name__}")


def decode_float(text: str) -> float:
    return float(text)


@dataclass
class Report:
    command: str
    config: dict
    checks: list = field(default_factory=list)
    timing: dict = field(default_factory=dict)
    _t0: float = field(default_factory=time.perf_counter, repr=False)

    def add(self, section: str, name: str, verdict: str, **values) -> dict:
        entry = {"section": section, "name": name, "verdict": verdict, "values": values}
        self.checks.append(entry)
        return entry

    def check(self, section: str, name: str, value: float, tol: float, below: bool = True, **extra) -> dict:
        ok = value < tol if below else value > tol
        verdict = (PASS if ok else FAIL) if below else (EXPECTED_FAIL if ok else FAIL)
        return self.add(section, name, verdict, residual=value, tol=tol, **extra)

    def section_time(self, section: str, seconds: float):
        self.timing[section] = self.timing.get(section, 0.0) + seconds

    @property
    def failed(self) -> list:
        return [c for c in self.checks if c["verdict"] == FAIL]

    @property
    def passed(self) -> bool:
        return not self.failed

    def to_dict(self) -> dict:
        return {
            "tool": "ymsym",
            "version": __version__,
            "command": self.command,
            "config": encode(self.config),
            "checks": [encode(c) for c in self.checks],
            "summary": {v: sum(c["verdict"] == v for c in self.checks)
                        for v in (PASS, FAIL, MEASURED, EXPECTED_FAIL)},
            "timing": encode(self.timing),
            "timestamp": datetime.now(timezone.utc).isoformat(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)


def strip_volatile(data: dict) -> dict:
    return {k: v for k, v in data.items() if k not in VOLATILE_KEYS}
