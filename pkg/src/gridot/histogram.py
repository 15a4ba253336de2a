"""d-dimensional histograms on regular grids, plus file ingestion and integerization."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import (
    DegenerateBoundsError,
    EmptyInputError,
    GridotError,
    LengthMismatchError,
    NegativeMassError,
    OverflowGuardError,
    ParseError,
    UnsupportedFormatError,
    ZeroTotalError,
)

MAX_BINS = 2**31 - 1
DEFAULT_TARGET_TOTAL = 10**7


@dataclass(frozen=True)
class GridShape:
    """Per-axis sizes of a regular grid. Bins are indexed row-major, last axis fastest."""

    dims: tuple[int, ...]

    def __post_init__(self) -> None:
        dims = tuple(int(n) for n in self.dims)
        if not dims:
            raise EmptyInputError("grid shape needs at least one axis")
        if any(n < 1 for n in dims):
            raise GridotError(f"axis sizes must be positive, got {dims}")
        if math.prod(dims) > MAX_BINS:
            raise OverflowGuardError(f"bin count {math.prod(dims)} exceeds index range")
        object.__setattr__(self, "dims", dims)

    @property
    def ndim(self) -> int:
        return len(self.dims)

    @property
    def nbins(self) -> int:
        return math.prod(self.dims)

    def strides(self) -> tuple[int, ...]:
        """Row-major strides: flat = sum(coords[i] * strides[i])."""
        out = [1] * self.ndim
        for i in range(self.ndim - 2, -1, -1):
            out[i] = out[i + 1] * self.dims[i + 1]
        return tuple(out)

    def ravel(self, coords: tuple[int, ...]) -> int:
        if len(coords) != self.ndim:
            raise LengthMismatchError(f"expected {self.ndim} coordinates, got {len(coords)}")
        flat = 0
        for c, n, s in zip(coords, self.dims, self.strides()):
            if not 0 <= c < n:
                raise GridotError(f"coordinate {c} outside [0, {n})")
            flat += c * s
        return flat

    def unravel(self, flat: int) -> tuple[int, ...]:
        if not 0 <= flat < self.nbins:
            raise GridotError(f"flat index {flat} outside [0, {self.nbins})")
        coords = []
        for s in self.strides():
            coords.append(flat // s)
            flat %= s
        return tuple(coords)

    def axis_coords(self, axis: int) -> np.ndarray:
        """Coordinate along `axis` for every flat bin index, as an int64 array."""
        s = self.strides()[axis]
        return (np.arange(self.nbins, dtype=np.int64) // s) % self.dims[axis]


def _validated_mass(shape: GridShape, values, dtype) -> np.ndarray:
    raw = np.asarray(values).ravel()
    if dtype is np.int64 and raw.dtype.kind not in "iu":
        as_float = raw.astype(np.float64)
        if np.any(np.isfinite(as_float) & (as_float != np.floor(as_float))):
            raise GridotError("integer histogram requires whole-number masses")
    arr = raw.astype(dtype)
    if arr.size != shape.nbins:
        raise LengthMismatchError(f"got {arr.size} values for {shape.nbins} bins")
    if np.any(arr < 0) or not np.all(np.isfinite(arr.astype(np.float64))):
        raise NegativeMassError("histogram values must be finite and nonnegative")
    if not arr.any():
        raise ZeroTotalError("histogram total mass is zero")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Histogram:
    """Nonnegative real mass per bin, stored dense row-major. Immutable."""

    shape: GridShape
    mass: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "mass", _validated_mass(self.shape, self.mass, np.float64))

    @property
    def total(self) -> float:
        return float(self.mass.sum())


@dataclass(frozen=True)
class IntegerHistogram:
    """Nonnegative integer mass per bin, stored dense row-major. Immutable."""

    shape: GridShape
    mass: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "mass", _validated_mass(self.shape, self.mass, np.int64))

    @property
    def total(self) -> int:
        return int(self.mass.sum())


def from_dense(shape: GridShape | tuple[int, ...], values) -> Histogram:
    """Build a histogram from a dense row-major array of bin masses."""
    if not isinstance(shape, GridShape):
        shape = GridShape(tuple(shape))
    return Histogram(shape, np.array(values, dtype=np.float64).ravel())


def bin_points(
    points,
    shape: GridShape | tuple[int, ...],
    bounds: list[tuple[float, float]] | None = None,
) -> Histogram:
    """Bin a point cloud onto a regular grid with unit mass per point.

    Bin index along axis i is floor((x - min_i) / (max_i - min_i) * N_i), clamped
    to [0, N_i - 1], so points sitting on the upper bound land in the last bin.
    Bounds default to the per-axis min/max of the data.
    """
    if not isinstance(shape, GridShape):
        shape = GridShape(tuple(shape))
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    if pts.size == 0:
        raise EmptyInputError("no points to bin")
    if pts.ndim != 2 or pts.shape[1] != shape.ndim:
        raise LengthMismatchError(
            f"points must be (k, {shape.ndim}), got {pts.shape}"
        )
    if bounds is None:
        bounds = [(float(pts[:, i].min()), float(pts[:, i].max())) for i in range(shape.ndim)]
    if len(bounds) != shape.ndim:
        raise LengthMismatchError(f"expected {shape.ndim} bounds, got {len(bounds)}")
    lo = np.array([b[0] for b in bounds], dtype=np.float64)
    hi = np.array([b[1] for b in bounds], dtype=np.float64)
    if np.any(hi <= lo):
        raise DegenerateBoundsError("each axis needs max > min")
    dims = np.array(shape.dims, dtype=np.int64)
    idx = np.floor((pts - lo) / (hi - lo) * dims).astype(np.int64)
    np.clip(idx, 0, dims - 1, out=idx)
    strides = np.array(shape.strides(), dtype=np.int64)
    flat = idx @ strides
    counts = np.bincount(flat, minlength=shape.nbins).astype(np.float64)
    return Histogram(shape, counts)


def integerize(h: Histogram | IntegerHistogram, target_total: int = DEFAULT_TARGET_TOTAL) -> IntegerHistogram:
    """Rescale to integer masses summing exactly to target_total (largest remainder).

    Shares are computed in exact rational arithmetic; leftover units go to the
    largest fractional remainders, ties broken by lowest bin index. Zero bins stay
    zero, and inputs already proportional to an integer vector come back exact.
    """
    target_total = int(target_total)
    if target_total < 1:
        raise GridotError(f"target_total must be >= 1, got {target_total}")
    masses = [Fraction(float(v)) for v in h.mass]
    total = sum(masses)
    shares = [m * target_total / total for m in masses]
    base = [int(s) for s in shares]
    leftover = target_total - sum(base)
    if leftover:
        order = sorted(range(len(shares)), key=lambda i: (base[i] - shares[i], i))
        for i in order[:leftover]:
            base[i] += 1
    return IntegerHistogram(h.shape, np.array(base, dtype=np.int64))


def load_pgm(path: str | Path) -> Histogram:
    """Load a PGM image (P2 ascii or P5 binary, maxval <= 65535) as a 2-D histogram.

    Axis 0 is the image row, axis 1 the column. P5 samples are one byte up to
    maxval 255 and two big-endian bytes beyond.
    """
    data = Path(path).read_bytes()
    pos = 0

    def token():
        nonlocal pos
        while pos < len(data):
            c = data[pos : pos + 1]
            if c == b"#":
                while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                    pos += 1
            elif c.isspace():
                pos += 1
            else:
                break
        if pos >= len(data):
            raise ParseError(f"unexpected end of file at byte {pos}")
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        return data[start:pos], start

    magic, _ = token()
    if magic not in (b"P2", b"P5"):
        raise UnsupportedFormatError(f"not a P2/P5 PGM file (magic {magic!r})")

    def int_token(name):
        tok, at = token()
        try:
            return int(tok)
        except ValueError:
            raise ParseError(f"bad {name} {tok!r} at byte {at}") from None

    width = int_token("width")
    height = int_token("height")
    maxval = int_token("maxval")
    if width < 1 or height < 1:
        raise ParseError(f"bad image size {width}x{height}")
    if not 0 < maxval <= 65535:
        raise UnsupportedFormatError(f"maxval {maxval} outside (0, 65535]")
    count = width * height

    if magic == b"P2":
        vals = np.empty(count, dtype=np.float64)
        for k in range(count):
            tok, at = token()
            try:
                v = int(tok)
            except ValueError:
                raise ParseError(f"bad sample {tok!r} at byte {at}") from None
            if v > maxval:
                raise ParseError(f"sample {v} exceeds maxval {maxval} at byte {at}")
            vals[k] = v
    else:
        pos += 1  # single whitespace byte after the maxval token
        width_bytes = 1 if maxval <= 255 else 2
        need = count * width_bytes
        raw = data[pos : pos + need]
        if len(raw) < need:
            raise ParseError(f"truncated raster: need {need} bytes at byte {pos}, have {len(raw)}")
        dt = np.uint8 if width_bytes == 1 else np.dtype(">u2")
        vals = np.frombuffer(raw, dtype=dt).astype(np.float64)
        if np.any(vals > maxval):
            raise ParseError(f"raster sample exceeds maxval {maxval}")

    return Histogram(GridShape((height, width)), vals)


def load_csv(path: str | Path) -> Histogram:
    """Load a histogram CSV: first line '# shape: N1,N2,...', then one value per line."""
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise ParseError("empty file")
    head = lines[0].strip()
    if not head.startswith("#") or "shape:" not in head:
        raise ParseError("line 1: expected '# shape: N1,N2,...' header")
    try:
        dims = tuple(int(t) for t in head.split("shape:", 1)[1].split(","))
    except ValueError:
        raise ParseError(f"line 1: cannot parse shape from {head!r}") from None
    shape = GridShape(dims)
    vals = []
    for lineno, line in enumerate(lines[1:], start=2):
        text = line.strip()
        if not text:
            continue
        try:
            vals.append(float(text))
        except ValueError:
            raise ParseError(f"line {lineno}: bad value {text!r}") from None
    if len(vals) != shape.nbins:
        raise ParseError(f"got {len(vals)} values for {shape.nbins} bins")
    return Histogram(shape, np.array(vals, dtype=np.float64))


def write_csv(h: Histogram | IntegerHistogram, path: str | Path) -> None:
    """Write a histogram in the CSV format load_csv reads back."""
    with open(path, "w") as fh:
        fh.write("# shape: " + ",".join(str(n) for n in h.shape.dims) + "\n")
        for v in h.mass:
            fh.write(f"{v}\n")


def load_points_csv(path: str | Path) -> np.ndarray:
    """Load a point cloud CSV (one point per line, d comma-separated reals).

    Lines starting with '#' are skipped. Returns a (k, d) float array.
    """
    rows = []
    d = None
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        parts = text.split(",")
        if d is None:
            d = len(parts)
        elif len(parts) != d:
            raise ParseError(f"line {lineno}: expected {d} fields, got {len(parts)}")
        try:
            rows.append([float(t) for t in parts])
        except ValueError:
            raise ParseError(f"line {lineno}: bad value in {text!r}") from None
    if not rows:
        raise EmptyInputError("no points in file")
    return np.array(rows, dtype=np.float64)
