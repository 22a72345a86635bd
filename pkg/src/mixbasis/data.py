"""Dataset ingestion and per-column preprocessing transforms.

The fitters assume complete data: every observation has a finite value for
every item.  Ingestion therefore rejects missing or non-numeric cells
outright, naming the offending row and column.  Transforms are pure
per-column functions used to move raw measurements into a basis domain:
the empirical CDF (midranks) for arbitrary real data, a mean-one-half
rescaling for non-negative data headed for the gamma basis, a min-max
linear rescale, and the midpoint mapping for Likert levels.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from ._errors import ConfigError, DataError

__all__ = [
    "Dataset",
    "TransformSpec",
    "load_csv",
    "cdf_transform",
    "rescale_mean_half",
    "linear_rescale",
    "likert_map",
    "apply_transforms",
    "parse_transform_spec",
]

TRANSFORM_NAMES = ("identity", "linear_rescale", "cdf", "mean_half", "likert")


@dataclass(frozen=True, eq=False)
class Dataset:
    """An N x M matrix of measurements plus item labels; immutable."""

    x: np.ndarray
    item_names: tuple[str, ...]

    def __post_init__(self):
        arr = np.ascontiguousarray(self.x, dtype=float)
        if arr.ndim != 2:
            raise DataError(f"data must be 2-D, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DataError(f"need N >= 1 and M >= 1, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            i, j = np.argwhere(~np.isfinite(arr))[0]
            raise DataError(f"non-finite value at row {i + 1}, column {j + 1}")
        if len(self.item_names) != arr.shape[1]:
            raise DataError(
                f"{len(self.item_names)} item names for {arr.shape[1]} columns"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "x", arr)
        object.__setattr__(self, "item_names", tuple(str(s) for s in self.item_names))

    @property
    def N(self) -> int:
        return self.x.shape[0]

    @property
    def M(self) -> int:
        return self.x.shape[1]


def _default_names(m: int) -> tuple[str, ...]:
    return tuple(f"item_{j + 1}" for j in range(m))


def load_csv(path, has_header: bool | None = None) -> Dataset:
    """Read a rectangular numeric CSV into a Dataset.

    ``has_header`` True/False forces the first-row interpretation; None
    auto-detects (a first row with any non-numeric cell is a header).
    Lines starting with ``#`` are skipped, so files written by the CLI
    (which embed provenance comments) round-trip.
    """
    rows = []
    numbers = []
    with open(path, newline="") as fh:
        for rownum, rec in enumerate(csv.reader(fh), start=1):
            if not rec or (rec[0].lstrip().startswith("#")):
                continue
            rows.append((rownum, [c.strip() for c in rec]))
    if not rows:
        raise DataError(f"{path}: no data rows")

    def parse_row(rownum, cells):
        vals = []
        for colnum, cell in enumerate(cells, start=1):
            try:
                v = float(cell)
            except ValueError:
                raise DataError(
                    f"{path}: non-numeric cell {cell!r} at row {rownum}, column {colnum}"
                )
            if not np.isfinite(v):
                raise DataError(
                    f"{path}: missing or non-finite cell {cell!r} at row {rownum}, column {colnum}"
                )
            vals.append(v)
        return vals

    first_num, first_cells = rows[0]
    if has_header is None:
        try:
            parse_row(first_num, first_cells)
            has_header = False
        except DataError:
            has_header = True
    if has_header:
        names = tuple(first_cells)
        body = rows[1:]
        if not body:
            raise DataError(f"{path}: header but no data rows")
    else:
        names = _default_names(len(first_cells))
        body = rows

    width = len(body[0][1])
    for rownum, cells in body:
        if len(cells) != width:
            raise DataError(
                f"{path}: ragged row {rownum} has {len(cells)} cells, expected {width}"
            )
        numbers.append(parse_row(rownum, cells))
    if len(names) != width:
        raise DataError(f"{path}: {len(names)} header names for {width} columns")
    return Dataset(np.asarray(numbers, dtype=float), names)


def _ascolumn(column) -> np.ndarray:
    col = np.asarray(column, dtype=float)
    if col.ndim != 1 or col.size < 1:
        raise DataError(f"transform expects a non-empty 1-D column, got shape {col.shape}")
    if not np.all(np.isfinite(col)):
        raise DataError("transform input holds non-finite values")
    return col


def cdf_transform(column) -> np.ndarray:
    """Empirical-CDF transform via midranks: value -> (rank - 0.5)/N.

    Ties share their average rank, so the map is deterministic and
    permutation-invariant; outputs lie strictly inside (0, 1), keeping
    clear of basis functions that vanish at the endpoints.
    """
    col = _ascolumn(column)
    ranks = rankdata(col, method="average")
    return (ranks - 0.5) / col.size


def rescale_mean_half(column) -> np.ndarray:
    """Scale a non-negative column so its mean is 0.5 (gamma-basis prep)."""
    col = _ascolumn(column)
    mean = col.mean()
    if mean <= 0.0:
        raise DataError(f"column mean {mean:g} is not positive; cannot rescale to mean 0.5")
    return col * (0.5 / mean)


def linear_rescale(column) -> np.ndarray:
    """Affinely map a column onto [0, 1]: lowest value to 0, highest to 1."""
    col = _ascolumn(column)
    lo, hi = col.min(), col.max()
    if hi <= lo:
        raise DataError(
            f"constant column (all {lo:g}); linear rescale is degenerate, use cdf or likert"
        )
    return (col - lo) / (hi - lo)


def likert_map(column, levels: int) -> np.ndarray:
    """Map integer levels 1..L to midpoints (2v - 1)/(2L) inside (0, 1).

    For L = 5 the images are exactly 0.1, 0.3, 0.5, 0.7, 0.9.
    """
    if levels < 1:
        raise ConfigError(f"likert levels must be >= 1, got {levels}")
    col = _ascolumn(column)
    rounded = np.rint(col)
    if np.any(np.abs(col - rounded) > 1e-9):
        i = int(np.argmax(np.abs(col - rounded) > 1e-9))
        raise DataError(f"non-integer Likert value {col[i]!r} at position {i}")
    if np.any((rounded < 1) | (rounded > levels)):
        bad = (rounded < 1) | (rounded > levels)
        i = int(np.argmax(bad))
        raise DataError(f"Likert value {col[i]:g} at position {i} outside 1..{levels}")
    return (2.0 * rounded - 1.0) / (2.0 * levels)


@dataclass(frozen=True)
class TransformSpec:
    """Per-item transform selection.

    Each entry is one of ``identity``, ``linear_rescale``, ``cdf``,
    ``mean_half``, or ``likert:<levels>``.
    """

    per_item: tuple[str, ...]

    def __post_init__(self):
        for name in self.per_item:
            _validate_transform_name(name)

    @classmethod
    def uniform(cls, name: str, m: int) -> "TransformSpec":
        return cls(tuple([name] * m))


def _validate_transform_name(name: str) -> None:
    base, _, arg = name.partition(":")
    if base not in TRANSFORM_NAMES:
        raise ConfigError(f"unknown transform {name!r}; choose from {TRANSFORM_NAMES}")
    if base == "likert":
        if not arg:
            raise ConfigError("likert transform needs a level count, e.g. likert:L=5")
        key, _, val = arg.partition("=")
        raw = val if val else key
        try:
            int(raw)
        except ValueError:
            raise ConfigError(f"non-integer likert level count in {name!r}")
    elif arg:
        raise ConfigError(f"transform {base!r} takes no argument, got {name!r}")


def _likert_levels(name: str) -> int:
    _, _, arg = name.partition(":")
    key, _, val = arg.partition("=")
    return int(val if val else key)


def transform_column(column, name: str) -> np.ndarray:
    """Apply one named transform to one column."""
    _validate_transform_name(name)
    base = name.partition(":")[0]
    if base == "identity":
        return _ascolumn(column).copy()
    if base == "linear_rescale":
        return linear_rescale(column)
    if base == "cdf":
        return cdf_transform(column)
    if base == "mean_half":
        return rescale_mean_half(column)
    return likert_map(column, _likert_levels(name))


def apply_transforms(data: Dataset, spec: TransformSpec) -> Dataset:
    """Apply a per-item TransformSpec, returning a new Dataset."""
    if len(spec.per_item) != data.M:
        raise ConfigError(f"{len(spec.per_item)} transforms for {data.M} items")
    cols = [transform_column(data.x[:, j], spec.per_item[j]) for j in range(data.M)]
    return Dataset(np.column_stack(cols), data.item_names)


def parse_transform_spec(args, item_names) -> TransformSpec:
    """Resolve CLI transform arguments to a per-item spec.

    Each argument is either a bare transform name (applied to every item)
    or a comma-separated list of ``item=transform`` pairs keyed by item
    name.  Later arguments override earlier ones.  A single string is
    treated as one argument.
    """
    if isinstance(args, str):
        args = [args]
    m = len(item_names)
    per_item = ["identity"] * m
    index = {name: j for j, name in enumerate(item_names)}
    for arg in args:
        if "=" in arg and not arg.startswith("likert"):
            for pair in arg.split(","):
                item, _, name = pair.partition("=")
                item = item.strip()
                if item not in index:
                    raise ConfigError(f"unknown item {item!r} in transform spec {arg!r}")
                _validate_transform_name(name.strip())
                per_item[index[item]] = name.strip()
        else:
            _validate_transform_name(arg.strip())
            per_item = [arg.strip()] * m
    return TransformSpec(tuple(per_item))
