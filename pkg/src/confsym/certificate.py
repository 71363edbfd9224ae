"""Pass/fail certificates and their deterministic JSON form."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

SCHEMA = "ecs-cert/1"


@dataclass
class Check:
    """One named measurement compared against a tolerance.

    ``passed`` is supplied by the caller because the comparison direction
    differs between checks (residual below a bound, margin above one).
    """

    name: str
    value: float
    tol: float
    passed: bool
    note: str = ""
    point: object = None

    def to_dict(self):
        out = {"name": self.name, "value": self.value, "tol": self.tol, "pass": bool(self.passed)}
        if self.note:
            out["note"] = self.note
        if self.point is not None:
            out["point"] = self.point
        return out


@dataclass
class Section:
    name: str
    checks: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)
    skipped: bool = False
    error: str | None = None

    @property
    def passed(self):
        if self.skipped or self.error is not None:
            return False
        return all(c.passed for c in self.checks)

    def failures(self):
        return [c.name for c in self.checks if not c.passed]

    def check(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    @classmethod
    def skip(cls, name, reason):
        return cls(name, skipped=True, error=reason)

    def to_dict(self):
        out = {"name": self.name, "pass": self.passed}
        if self.skipped:
            out["skipped"] = True
        if self.error is not None:
            out["error"] = self.error
        out["checks"] = [c.to_dict() for c in self.checks]
        if self.extra:
            out["extra"] = self.extra
        return out


@dataclass
class Certificate:
    config: dict
    sections: list = field(default_factory=list)
    verdict: str | None = None

    @property
    def passed(self):
        # a certificate with no sections certifies nothing
        return bool(self.sections) and all(s.passed for s in self.sections)

    def section(self, name):
        for s in self.sections:
            if s.name == name:
                return s
        raise KeyError(name)

    def to_dict(self):
        out = {"schema": SCHEMA, "config": self.config,
               "sections": [s.to_dict() for s in self.sections],
               "overall": self.passed}
        if self.verdict is not None:
            out["verdict"] = self.verdict
        return out

    def to_json(self):
        return dumps(self.to_dict())


def _fmt_float(x):
    if math.isnan(x):
        return '"NaN"'
    if math.isinf(x):
        return '"Infinity"' if x > 0 else '"-Infinity"'
    return format(x, ".17g")


def _encode(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{_encode(str(k), indent, level + 1)}: {_encode(v, indent, level + 1)}"
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool)
               for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent=2):
    """JSON with every float written at 17 significant digits.

    The stdlib encoder offers no hook for float formatting, hence this
    small recursive writer. Output depends only on ``obj``.
    """
    return _encode(obj, indent, 0) + "\n"
