"""P-value samples, the non-regular partition family, and fast bin counting.

A partition of [0, 1] is encoded as (N, k, l): k regular cells of width 1/N,
one central cell spanning [k/N, l/N], and N - l regular cells of width 1/N.
Cell membership is half-open [a, b), except the cell whose right edge is 1,
which also receives values equal to 1.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .errors import (
    EmptyInput,
    InputError,
    InvalidRange,
    MismatchedResolution,
    NonFinite,
    OutOfRange,
    TooFewValues,
)

__all__ = [
    "PValueSample",
    "PartitionSpec",
    "BinCounts",
    "GridPrefix",
    "load_sample",
    "read_pvalue_file",
    "enumerate_partitions",
    "partition_count",
    "grid_prefix",
    "bin_counts",
    "histogram_heights",
]


@dataclass(frozen=True)
class PValueSample:
    """Sorted, validated vector of p-values.

    ``values`` is ascending and confined to [0, 1]; ``m >= 2`` because the
    risk formulas divide by m - 1.
    """

    values: np.ndarray
    m: int

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        self.values.flags.writeable = False


@dataclass(frozen=True)
class PartitionSpec:
    """Non-regular partition (N, k, l) with 0 <= k < l <= N."""

    n: int
    k: int
    l: int

    def __post_init__(self):
        if self.n < 1:
            raise InvalidRange(f"grid resolution must be >= 1, got {self.n}")
        if not (0 <= self.k < self.l <= self.n):
            raise InvalidRange(f"need 0 <= k < l <= N, got (N={self.n}, k={self.k}, l={self.l})")

    @property
    def dimension(self) -> int:
        """Number of cells D = k + 1 + (N - l)."""
        return self.k + 1 + (self.n - self.l)

    @property
    def lam(self) -> float:
        return self.k / self.n

    @property
    def mu(self) -> float:
        return self.l / self.n

    @property
    def central_width(self) -> float:
        return (self.l - self.k) / self.n

    @property
    def central_index(self) -> int:
        return self.k

    def widths(self) -> np.ndarray:
        w = np.full(self.dimension, 1.0 / self.n)
        w[self.k] = self.central_width
        return w

    def edges(self) -> np.ndarray:
        """Left edges of all cells plus the final right edge 1."""
        left = np.concatenate([
            np.arange(self.k) / self.n,
            [self.lam],
            np.arange(self.l, self.n + 1) / self.n,
        ])
        return left


@dataclass(frozen=True)
class BinCounts:
    """Occupancy counts per cell of a generating partition."""

    counts: np.ndarray
    total: int

    def __post_init__(self):
        object.__setattr__(self, "counts", np.asarray(self.counts, dtype=np.int64))
        self.counts.flags.writeable = False


@dataclass(frozen=True)
class GridPrefix:
    """Cumulative counts over the regular N-grid.

    ``cum[j]`` counts values strictly below j/N for j < N; ``cum[N] = m`` so
    that values equal to 1 land in the last cell.
    """

    n: int
    cum: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "cum", np.asarray(self.cum, dtype=np.int64))
        self.cum.flags.writeable = False


def load_sample(raw: Sequence[float] | np.ndarray) -> PValueSample:
    """Validate and sort a vector of p-values.

    Raises ``EmptyInput``, ``NonFinite``, ``OutOfRange`` or ``TooFewValues``.
    Reported positions refer to the original input order.
    """
    arr = np.asarray(list(raw) if not isinstance(raw, np.ndarray) else raw, dtype=float)
    if arr.ndim != 1:
        arr = arr.ravel()
    if arr.size == 0:
        raise EmptyInput("no p-values supplied")
    bad = np.nonzero(~np.isfinite(arr))[0]
    if bad.size:
        raise NonFinite(int(bad[0]))
    bad = np.nonzero((arr < 0.0) | (arr > 1.0))[0]
    if bad.size:
        raise OutOfRange(int(bad[0]), float(arr[bad[0]]))
    if arr.size < 2:
        raise TooFewValues(f"need at least 2 p-values, got {arr.size}")
    return PValueSample(values=np.sort(arr), m=int(arr.size))


def read_pvalue_file(path: str | Path, column: str | None = None) -> np.ndarray:
    """Read raw p-values from a file, preserving input order.

    Plain-text mode (default): one value per line, blank lines and lines
    starting with '#' ignored.  CSV mode (``column`` given): values taken
    from the named column.  Parse errors cite the 1-based line number.
    """
    path = Path(path)
    out: list[float] = []
    if column is None:
        with open(path) as fh:
            for lineno, line in enumerate(fh, start=1):
                text = line.strip()
                if not text or text.startswith("#"):
                    continue
                try:
                    val = float(text)
                except ValueError:
                    raise InputError(f"{path}:{lineno}: not a number: {text!r}") from None
                if not math.isfinite(val):
                    raise InputError(f"{path}:{lineno}: non-finite value")
                if not 0.0 <= val <= 1.0:
                    raise InputError(f"{path}:{lineno}: p-value out of [0, 1]: {val!r}")
                out.append(val)
    else:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or column not in reader.fieldnames:
                raise InputError(f"{path}: no column named {column!r}")
            for lineno, row in enumerate(reader, start=2):
                text = (row[column] or "").strip()
                if not text:
                    continue
                try:
                    val = float(text)
                except ValueError:
                    raise InputError(f"{path}:{lineno}: not a number: {text!r}") from None
                if not math.isfinite(val):
                    raise InputError(f"{path}:{lineno}: non-finite value")
                if not 0.0 <= val <= 1.0:
                    raise InputError(f"{path}:{lineno}: p-value out of [0, 1]: {val!r}")
                out.append(val)
    return np.asarray(out, dtype=float)


def partition_count(n_min: int, n_max: int) -> int:
    """Closed-form size of the family: sum of N(N+1)/2 over the grid range."""
    if n_min < 1 or n_min > n_max:
        raise InvalidRange(f"need 1 <= n_min <= n_max, got ({n_min}, {n_max})")
    total = 0
    for n in range(n_min, n_max + 1):
        total += n * (n + 1) // 2
    return total


def enumerate_partitions(n_min: int, n_max: int) -> Iterator[PartitionSpec]:
    """Yield every (N, k, l) with n_min <= N <= n_max and 0 <= k < l <= N.

    Partitions that induce the same cell set at different N (the full-interval
    cell (N, 0, N) for every N) are all yielded; selection tie-breaking
    downstream resolves them deterministically.
    """
    if n_min < 1 or n_min > n_max:
        raise InvalidRange(f"need 1 <= n_min <= n_max, got ({n_min}, {n_max})")
    for n in range(n_min, n_max + 1):
        for k in range(n):
            for l in range(k + 1, n + 1):
                yield PartitionSpec(n, k, l)


def grid_prefix(sample: PValueSample, n: int) -> GridPrefix:
    """Cumulative grid counts enabling O(1) cell counts for any (N, k, l)."""
    if n < 1:
        raise InvalidRange(f"grid resolution must be >= 1, got {n}")
    edges = np.arange(n + 1) / n
    cum = np.searchsorted(sample.values, edges, side="left")
    cum[-1] = sample.m  # right-closed last cell: values equal to 1 count
    return GridPrefix(n=n, cum=cum)


def bin_counts(prefix: GridPrefix, spec: PartitionSpec) -> BinCounts:
    """Cell occupancy from prefix differences, O(1) per cell."""
    if prefix.n != spec.n:
        raise MismatchedResolution(f"prefix built for N={prefix.n}, spec has N={spec.n}")
    cum = prefix.cum
    counts = np.concatenate([
        np.diff(cum[: spec.k + 1]),
        [cum[spec.l] - cum[spec.k]],
        np.diff(cum[spec.l:]),
    ])
    return BinCounts(counts=counts, total=int(cum[-1]))


def histogram_heights(counts: BinCounts, spec: PartitionSpec) -> np.ndarray:
    """Density heights m_j / (m * w_j); the histogram integrates to 1."""
    if len(counts.counts) != spec.dimension:
        raise MismatchedResolution(
            f"{len(counts.counts)} counts for a {spec.dimension}-cell partition")
    return counts.counts / (counts.total * spec.widths())
