"""Shared report type, error classes, tolerances and small helpers."""

from __future__ import annotations

import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def _env_eps() -> tuple[float, str | None]:
    """Tolerance from the ``EPS`` environment variable and the reason it was rejected, if it was."""
    raw = os.environ.get("EPS")
    if not raw:
        return 1e-9, None
    try:
        value = float(raw)
    except ValueError:
        return 1e-9, f"EPS must be a float, got {raw!r}"
    if not value > 0:
        return 1e-9, f"EPS must be positive, got {raw!r}"
    return value, None


#: Global tolerance for numerical equality and coefficient pruning.
#: An invalid ``EPS`` leaves the default in place and is reported in ``EPS_ERROR``.
EPS, EPS_ERROR = _env_eps()
if EPS_ERROR is not None:
    warnings.warn(f"{EPS_ERROR}; using 1e-9", RuntimeWarning, stacklevel=2)


class RigidityError(Exception):
    """Base class for errors raised by this package."""


class InvalidStructure(RigidityError):
    """Input data does not define the claimed structure."""


class HypothesisError(RigidityError):
    """A theorem hypothesis (e.g. torsion-free isotropy) is violated."""


class CertificateError(RigidityError):
    """A certificate is malformed (wrong depth, missing table entries)."""


class ResourceLimitError(RigidityError):
    """Instance exceeds a configured size cap."""


class _NotHomogeneous:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "NotHomogeneous"

    def __bool__(self) -> bool:
        return False


#: Sentinel returned by degree computations on non-homogeneous elements.
NOT_HOMOGENEOUS = _NotHomogeneous()


@dataclass
class Check:
    name: str
    passed: bool
    witness: Any = None
    detail: str = ""

    def to_dict(self) -> dict:
        out = {"name": self.name, "status": "pass" if self.passed else "fail"}
        if self.witness is not None:
            out["witness"] = _jsonable(self.witness)
        if self.detail:
            out["detail"] = self.detail
        return out


@dataclass
class ValidationReport:
    """Ordered list of named pass/fail checks with optional witnesses."""

    subject: str = ""
    checks: list[Check] = field(default_factory=list)

    def add(self, name: str, passed: bool, witness: Any = None, detail: str = "") -> bool:
        self.checks.append(Check(name, bool(passed), witness, detail))
        return bool(passed)

    def extend(self, other: "ValidationReport", prefix: str = "") -> None:
        for c in other.checks:
            self.checks.append(Check(prefix + c.name, c.passed, c.witness, c.detail))

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def __bool__(self) -> bool:
        return self.ok

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def get(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "subject": self.subject,
            "status": "pass" if self.ok else "fail",
            "checks": [c.to_dict() for c in self.checks],
        }

    def __str__(self) -> str:
        lines = [f"{self.subject}: {'PASS' if self.ok else 'FAIL'}"]
        for c in self.checks:
            mark = "ok  " if c.passed else "FAIL"
            extra = f" witness={c.witness!r}" if c.witness is not None else ""
            lines.append(f"  [{mark}] {c.name}{extra}")
        return "\n".join(lines)


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, (str, int, bool)) or obj is None:
        return obj
    if isinstance(obj, float):
        return format_float(obj)
    if isinstance(obj, complex):
        return {"re": format_float(obj.real), "im": format_float(obj.imag)}
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in sorted(obj.items(), key=lambda kv: str(kv[0]))}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(x) for x in obj]
    if isinstance(obj, (set, frozenset)):
        return [_jsonable(x) for x in sorted(obj, key=repr)]
    return repr(obj)


def format_float(x: float) -> str:
    """Fixed 12-digit rendering used in every machine-readable report."""
    if abs(x) < 0.5e-12:
        x = 0.0
    return f"{x:.12f}"


def is_zero(c: Any, eps: float | None = None) -> bool:
    """Exact zero test for exact types, tolerance test for floats."""
    if isinstance(c, (float, complex)):
        return abs(c) <= (EPS if eps is None else eps)
    return c == 0


def pmap(fn: Callable[[T], R], items: Iterable[T], threads: int = 1) -> list[R]:
    """Order-preserving map, optionally over a thread pool."""
    items = list(items)
    if threads <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def first_duplicate(values: Sequence[Any]) -> Any:
    seen = set()
    for v in values:
        if v in seen:
            return v
        seen.add(v)
    return None
