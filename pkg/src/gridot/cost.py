"""Separable ground costs: one integer table per axis, summed across axes."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    GridotError,
    IndexOutOfRangeError,
    LengthMismatchError,
    OverflowGuardError,
    ParseError,
)
from .histogram import GridShape

# Entries must leave room for big-M dual arithmetic in 64-bit integers.
COST_GUARD = 2**59


@dataclass(frozen=True)
class SeparableCost:
    """Ground cost c(x, y) = sum_i tables[i][x_i, y_i] with integer tables."""

    tables: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        tables = []
        for i, t in enumerate(self.tables):
            arr = np.asarray(t, dtype=np.int64)
            if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
                raise LengthMismatchError(f"axis {i} table must be square, got {arr.shape}")
            if np.any(arr < 0):
                raise GridotError(f"axis {i} table has negative entries")
            arr = arr.copy()
            arr.flags.writeable = False
            tables.append(arr)
        if not tables:
            raise LengthMismatchError("need at least one axis table")
        if sum(int(t.max()) for t in tables) >= COST_GUARD:
            raise OverflowGuardError("summed per-axis maxima exceed the integer guard")
        object.__setattr__(self, "tables", tuple(tables))

    @property
    def ndim(self) -> int:
        return len(self.tables)

    @property
    def axis_sizes(self) -> tuple[int, ...]:
        return tuple(t.shape[0] for t in self.tables)

    @property
    def max_ground_cost(self) -> int:
        return sum(int(t.max()) for t in self.tables)

    def matches(self, shape: GridShape) -> bool:
        return self.axis_sizes == shape.dims


def power_cost(shape: GridShape | tuple[int, ...], p: int) -> SeparableCost:
    """Per-axis tables |a - b|**p for integer order p >= 1."""
    if not isinstance(shape, GridShape):
        shape = GridShape(tuple(shape))
    p = int(p)
    if p < 1:
        raise GridotError(f"order p must be a positive integer, got {p}")
    tables = []
    for n in shape.dims:
        if (n - 1) ** p >= COST_GUARD:
            raise OverflowGuardError(f"({n - 1})**{p} exceeds the integer guard")
        a = np.arange(n, dtype=np.int64)
        tables.append(np.abs(a[:, None] - a[None, :]) ** p)
    return SeparableCost(tuple(tables))


def ground_cost(cost: SeparableCost, x: tuple[int, ...], y: tuple[int, ...]) -> int:
    """Exact ground cost between two bin coordinates."""
    if len(x) != cost.ndim or len(y) != cost.ndim:
        raise LengthMismatchError(f"coordinates must have {cost.ndim} axes")
    out = 0
    for t, a, b in zip(cost.tables, x, y):
        n = t.shape[0]
        if not (0 <= a < n and 0 <= b < n):
            raise IndexOutOfRangeError(f"coordinate ({a}, {b}) outside [0, {n})")
        out += int(t[a, b])
    return out


def load_cost_tables(path: str | Path) -> SeparableCost:
    """Load per-axis tables from a text file.

    Each axis starts with a header '# axis: i, size: N' (axes numbered 1..d in
    order) followed by N lines of N whitespace-separated integers.
    """
    lines = Path(path).read_text().splitlines()
    tables = []
    i = 0
    axis = 0
    while i < len(lines):
        text = lines[i].strip()
        if not text:
            i += 1
            continue
        axis += 1
        if not text.startswith("#") or "axis:" not in text or "size:" not in text:
            raise ParseError(f"line {i + 1}: expected '# axis: {axis}, size: N' header")
        try:
            declared = int(text.split("axis:", 1)[1].split(",", 1)[0])
            size = int(text.split("size:", 1)[1])
        except ValueError:
            raise ParseError(f"line {i + 1}: cannot parse header {text!r}") from None
        if declared != axis:
            raise ParseError(f"line {i + 1}: axis {declared} out of order, expected {axis}")
        i += 1
        rows = []
        for r in range(size):
            if i >= len(lines):
                raise ParseError(f"line {i + 1}: axis {axis} truncated at row {r + 1}")
            try:
                row = [int(t) for t in lines[i].split()]
            except ValueError:
                raise ParseError(f"line {i + 1}: bad integer in {lines[i]!r}") from None
            if len(row) != size:
                raise ParseError(f"line {i + 1}: expected {size} entries, got {len(row)}")
            rows.append(row)
            i += 1
        tables.append(np.array(rows, dtype=np.int64))
    if not tables:
        raise ParseError("no axis tables in file")
    return SeparableCost(tuple(tables))
