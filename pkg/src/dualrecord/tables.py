"""Dual-record tables, parameter containers and the table file format.

A dual-record system observes three cells of a 2x2 table::

                 list 2 in   list 2 out
    list 1 in       x11         x10
    list 1 out      x01         (x00 unobserved)

The missed cell ``x00`` and the population size ``N`` are unknown by
construction, so they never appear on :class:`DualRecordTable`.
"""
from __future__ import annotations

import csv
import enum
import io
import json
import operator
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence, Union

from .exceptions import DomainError

FIELDS = ("x11", "x10", "x01")


def _count(name: str, value) -> int:
    if isinstance(value, bool):
        raise TypeError(f"{name} must be an integer count, got bool")
    try:
        value = operator.index(value)
    except TypeError:
        # accept integral floats such as 40.0 coming from JSON
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        else:
            raise TypeError(f"{name} must be an integer count, got {value!r}") from None
    if value < 0:
        raise ValueError(f"{name} must be non-negative, got {value}")
    return value


class Margins(NamedTuple):
    x1dot: int
    xdot1: int
    x0: int


@dataclass(frozen=True)
class DualRecordTable:
    """Observed cell counts of a two-list capture-recapture experiment."""

    x11: int
    x10: int
    x01: int

    def __post_init__(self):
        for name in FIELDS:
            object.__setattr__(self, name, _count(name, getattr(self, name)))
        if self.x11 + self.x10 + self.x01 < 1:
            raise ValueError("table is empty: x11 + x10 + x01 must be >= 1")

    @property
    def x1dot(self) -> int:
        return self.x11 + self.x10

    @property
    def xdot1(self) -> int:
        return self.x11 + self.x01

    @property
    def x0(self) -> int:
        return self.x11 + self.x10 + self.x01

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.x11, self.x10, self.x01)

    def scaled(self, k: int) -> "DualRecordTable":
        return DualRecordTable(self.x11 * k, self.x10 * k, self.x01 * k)


def margins(table: DualRecordTable) -> Margins:
    """Return ``(x1dot, xdot1, x0)``, the list totals and distinct captures."""
    x1dot = table.x11 + table.x10
    xdot1 = table.x11 + table.x01
    return Margins(x1dot, xdot1, x1dot + xdot1 - table.x11)


class Direction(enum.Enum):
    """Analyst knowledge about the behavioural response of list 2."""

    PRONE = "prone"
    AVERSE = "averse"
    UNKNOWN = "unknown"

    @classmethod
    def parse(cls, value: Union[str, "Direction"]) -> "Direction":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            choices = ", ".join(d.value for d in cls)
            raise ValueError(f"unknown direction {value!r}; expected one of {choices}") from None

    @property
    def code(self) -> int:
        """Integer code used by the compiled kernels."""
        return _DIRECTION_CODES[self]


_DIRECTION_CODES = {Direction.PRONE: 0, Direction.AVERSE: 1, Direction.UNKNOWN: 2}


def _check_prob(name: str, value: float):
    if not 0.0 < value < 1.0:
        raise DomainError(f"{name} must lie strictly inside (0, 1), got {value}")


@dataclass(frozen=True)
class MtbParams:
    """Parameters of the time-behavioural model: N, P(list 1), recapture c, first capture p."""

    N: int
    p1dot: float
    c: float
    p: float

    def __post_init__(self):
        if _count("N", self.N) < 1:
            raise DomainError("N must be >= 1")
        for name in ("p1dot", "c", "p"):
            _check_prob(name, getattr(self, name))


@dataclass(frozen=True)
class PhiParams:
    """Same model with the recapture probability written as ``c = phi * p``."""

    N: int
    p1dot: float
    p: float
    phi: float

    def __post_init__(self):
        if _count("N", self.N) < 1:
            raise DomainError("N must be >= 1")
        _check_prob("p1dot", self.p1dot)
        _check_prob("p", self.p)
        if not self.phi > 0:
            raise DomainError(f"phi must be positive, got {self.phi}")
        if self.phi * self.p >= 1.0:
            raise DomainError(f"phi * p = {self.phi * self.p} must be < 1")

    @property
    def c(self) -> float:
        return self.phi * self.p

    def to_mtb(self) -> MtbParams:
        return MtbParams(self.N, self.p1dot, self.c, self.p)


@dataclass(frozen=True)
class ValidationReport:
    flags: tuple[str, ...] = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not self.flags

    def __str__(self):
        return "ok" if self.ok else "; ".join(self.flags)


def validate(table: Union[DualRecordTable, Sequence[int]]) -> ValidationReport:
    """Report degeneracies that break one or more estimators.

    Accepts a table or raw ``(x11, x10, x01)`` counts, so an empty table can
    be diagnosed before construction fails on it.
    """
    if isinstance(table, DualRecordTable):
        x11, x10, x01 = table.as_tuple()
    else:
        x11, x10, x01 = (_count(n, v) for n, v in zip(FIELDS, table))
    flags = []
    if x11 + x10 + x01 == 0:
        flags.append("x0 = 0: empty table")
        return ValidationReport(tuple(flags))
    if x11 == 0:
        flags.append("x11 = 0: independence estimator undefined")
    if x10 == 0:
        flags.append("x10 = 0: prior hyperparameters degenerate")
    if x01 == 0:
        flags.append("x01 = 0: prior hyperparameters degenerate")
    return ValidationReport(tuple(flags))


# -- file format -------------------------------------------------------------

class TableFormatError(ValueError):
    """Raised when a table file cannot be parsed."""


def table_from_mapping(obj) -> DualRecordTable:
    if not isinstance(obj, dict):
        raise TableFormatError("expected a JSON object with keys x11, x10, x01")
    missing = [k for k in FIELDS if k not in obj]
    if missing:
        raise TableFormatError(f"missing field(s): {', '.join(missing)}")
    try:
        return DualRecordTable(*(obj[k] for k in FIELDS))
    except (TypeError, ValueError) as exc:
        raise TableFormatError(str(exc)) from None


def parse_table(text: str) -> DualRecordTable:
    """Parse JSON ``{"x11":..,"x10":..,"x01":..}`` or a CSV with header ``x11,x10,x01``."""
    stripped = text.strip()
    if not stripped:
        raise TableFormatError("empty input")
    if stripped.startswith("{"):
        try:
            obj = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise TableFormatError(f"invalid JSON: {exc}") from None
        return table_from_mapping(obj)

    rows = [r for r in csv.reader(io.StringIO(stripped)) if any(c.strip() for c in r)]
    header = [h.strip() for h in rows[0]]
    if sorted(header) != sorted(FIELDS):
        raise TableFormatError(f"CSV header must be x11,x10,x01, got {','.join(header)}")
    if len(rows) != 2:
        raise TableFormatError(f"CSV must hold exactly one data row, got {len(rows) - 1}")
    values = {}
    for name, cell in zip(header, rows[1]):
        try:
            values[name] = int(cell.strip())
        except ValueError:
            raise TableFormatError(f"{name}: not an integer: {cell!r}") from None
    return table_from_mapping(values)


def read_table(path: Union[str, Path]) -> DualRecordTable:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise TableFormatError(f"cannot read {path}: {exc.strerror}") from None
    return parse_table(text)


def table_to_json(table: DualRecordTable) -> str:
    return json.dumps({k: getattr(table, k) for k in FIELDS})


def table_to_csv(table: DualRecordTable) -> str:
    return "x11,x10,x01\n{},{},{}\n".format(*table.as_tuple())
