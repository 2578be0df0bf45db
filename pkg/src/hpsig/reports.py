"""Check results and reports with a stable JSON form."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Iterable

__all__ = ["CheckResult", "Report", "clean"]


def clean(value: Any) -> Any:
    """Make a value JSON-safe and stable across runs.

    Floats are rounded to 6 significant digits so the last bits of LAPACK
    output do not leak into byte-level comparisons of reports.
    """
    if isinstance(value, bool) or value is None or isinstance(value, (str, int)):
        return value
    if isinstance(value, float) or hasattr(value, "dtype") and getattr(value, "shape", None) == ():
        x = float(value)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if x == 0.0:
            return 0.0
        return float(f"{x:.6g}")
    if isinstance(value, complex):
        return [clean(value.real), clean(value.imag)]
    if isinstance(value, dict):
        return {str(k): clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [clean(v) for v in value]
    if hasattr(value, "tolist"):
        return clean(value.tolist())
    return value


@dataclass
class CheckResult:
    check: str
    max_violation: float
    passed: bool
    per_fiber: list | None = None
    notes: list[str] = field(default_factory=list)
    details: dict = field(default_factory=dict)

    def __bool__(self) -> bool:
        return bool(self.passed)

    def to_json(self) -> dict:
        out = {
            "check": self.check,
            "max_violation": clean(self.max_violation),
            "per_fiber": clean(self.per_fiber) if self.per_fiber is not None else [],
            "pass": bool(self.passed),
        }
        if self.notes:
            out["notes"] = list(self.notes)
        if self.details:
            out["details"] = clean(self.details)
        return out


@dataclass
class Report:
    name: str
    checks: list[CheckResult] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __bool__(self) -> bool:
        return self.passed

    def add(self, item: "CheckResult | Report | Iterable[CheckResult]") -> "Report":
        if isinstance(item, CheckResult):
            self.checks.append(item)
        elif isinstance(item, Report):
            self.checks.extend(item.checks)
            self.notes.extend(item.notes)
        else:
            self.checks.extend(item)
        return self

    def get(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.check == name:
                return c
        raise KeyError(name)

    def failures(self) -> list[CheckResult]:
        return [c for c in self.checks if not c.passed]

    @property
    def max_violation(self) -> float:
        vals = [c.max_violation for c in self.checks if c.max_violation is not None]
        return max(vals, default=0.0)

    def to_json(self) -> dict:
        out = {"name": self.name, "pass": self.passed, "checks": [c.to_json() for c in self.checks]}
        if self.notes:
            out["notes"] = list(self.notes)
        return out

    def summary(self) -> str:
        lines = [f"{self.name}: {'PASS' if self.passed else 'FAIL'}"]
        for c in self.checks:
            flag = "ok  " if c.passed else "FAIL"
            lines.append(f"  [{flag}] {c.check}  max_violation={c.max_violation:.3g}")
        return "\n".join(lines)
