"""Fixed basis families and the precomputed phi tensor.

Each basis function is a fixed, parameter-free probability density; the
model only ever fits convex mixing weights on top of them.  Five built-in
families are provided:

- Bernstein polynomials of degree d on [0, 1] (scaled beta densities with
  integer exponents),
- gamma densities on [0, inf),
- unit-width top-hat indicators on [0, T],
- Gaussians of growing width centred on the integers, on the real line,
- a circular trigonometric analogue of the Bernstein family on [0, 1],

plus tabulated user-supplied function sets loaded from CSV.

Evaluation is pure and stateless.  :func:`precompute_phi` evaluates every
basis function at every datum once, producing the :class:`PhiTensor` that
both fitters consume; after that step no fitter touches raw data or basis
math again.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import betaln, gammaln

from ._errors import ConfigError, DataError

__all__ = [
    "BasisSpec",
    "PhiTensor",
    "bernstein_eval",
    "gamma_eval",
    "tophat_eval",
    "gaussian_eval",
    "trig_eval",
    "parse_basis_spec",
    "precompute_phi",
]


def _asfloat(x):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DataError("basis functions require finite arguments")
    return arr


def _ret(x_arr, out):
    return float(out) if x_arr.ndim == 0 else out


def bernstein_eval(d, t, x):
    """Bernstein basis function t of degree d at x in [0, 1].

    Returns (d+1)!/(t!(d-t)!) x^t (1-x)^(d-t), the beta density with
    integer exponents; endpoints use the 0^0 = 1 convention.
    """
    if not 0 <= t <= d:
        raise DataError(f"index t={t} outside 0..{d}")
    x_arr = _asfloat(x)
    if np.any((x_arr < 0.0) | (x_arr > 1.0)):
        raise DataError(f"x={x} outside the Bernstein domain [0, 1]")
    # Coefficient via log-gamma: factorials overflow floats for d >~ 170.
    logc = gammaln(d + 2) - gammaln(t + 1) - gammaln(d - t + 1)
    out = np.exp(logc) * x_arr**t * (1.0 - x_arr) ** (d - t)
    return _ret(x_arr, out)


def gamma_eval(T, t, x):
    """Gamma basis function t of a size-T family at x >= 0.

    Returns (xT)^t / t! * T exp(-xT), a gamma density with shape t+1 and
    rate T.
    """
    if not 0 <= t <= T - 1:
        raise DataError(f"index t={t} outside 0..{T - 1}")
    x_arr = _asfloat(x)
    if np.any(x_arr < 0.0):
        raise DataError(f"x={x} outside the gamma domain [0, inf)")
    z = x_arr * T
    zsafe = np.where(z > 0.0, z, 1.0)
    logv = t * np.log(zsafe) - gammaln(t + 1) - z + math.log(T)
    at_zero = float(T) if t == 0 else 0.0
    out = np.where(z > 0.0, np.exp(logv), at_zero)
    return _ret(x_arr, out)


def tophat_eval(T, t, x):
    """Top-hat basis function t of a size-T family: indicator of [t, t+1).

    Intervals are right-open; the last bin [T-1, T] is closed so that x = T
    is representable.
    """
    if not 0 <= t <= T - 1:
        raise DataError(f"index t={t} outside 0..{T - 1}")
    x_arr = _asfloat(x)
    if t == T - 1:
        inside = (x_arr >= t) & (x_arr <= t + 1)
    else:
        inside = (x_arr >= t) & (x_arr < t + 1)
    out = inside.astype(float)
    return _ret(x_arr, out)


def gaussian_eval(T, t, x):
    """Gaussian basis function with signed index t, |t| <= (T-1)/2.

    A normal density with mean t and variance |t| + 1; widths grow away
    from the origin so the family covers a widening stretch of the line.
    """
    if T % 2 == 0:
        raise ConfigError(f"Gaussian family size must be odd, got T={T}")
    half = (T - 1) // 2
    if not -half <= t <= half:
        raise DataError(f"index t={t} outside -{half}..{half}")
    x_arr = _asfloat(x)
    v = abs(t) + 1.0
    out = np.exp(-((x_arr - t) ** 2) / (2.0 * v)) / math.sqrt(2.0 * math.pi * v)
    return _ret(x_arr, out)


def trig_eval(T, t, x):
    """Trigonometric basis function t of an odd size-T family at x.

    Returns A cos^(T-1)[pi (x - t/T)] with A = T 2^(T-1) B((T+1)/2, (T+1)/2).
    The exponent T-1 is even so the value is non-negative; x is taken
    modulo 1, which is a no-op on [0, 1) and gives wrap-around off it.
    """
    if T % 2 == 0:
        raise ConfigError(f"trig family size must be odd, got T={T}")
    if not 0 <= t <= T - 1:
        raise DataError(f"index t={t} outside 0..{T - 1}")
    x_arr = _asfloat(x) % 1.0
    log_a = math.log(T) + (T - 1) * math.log(2.0) + betaln((T + 1) / 2.0, (T + 1) / 2.0)
    c = np.abs(np.cos(np.pi * (x_arr - t / T)))
    with np.errstate(divide="ignore"):
        out = np.exp(log_a + (T - 1) * np.log(c))
    out = np.where(c > 0.0, out, 0.0)
    return _ret(x_arr, out)


@dataclass(frozen=True, eq=False)
class BasisSpec:
    """One item's basis family: which functions Phi_jt are, and how many.

    Construct through the classmethods (:meth:`bernstein`, :meth:`gamma`,
    :meth:`tophat`, :meth:`gaussian`, :meth:`trig`, :meth:`from_table`,
    :meth:`from_file`) or from a specification string via
    :func:`parse_basis_spec`.  Indices t run 0..size-1 uniformly across
    families; the Gaussian family's signed index is stored with offset
    -(size-1)/2 internally.
    """

    family: str
    size: int
    grid: np.ndarray | None = field(default=None, repr=False)
    table: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.family not in ("bernstein", "gamma", "tophat", "gaussian", "trig", "file"):
            raise ConfigError(f"unknown basis family {self.family!r}")
        if self.size < 1:
            raise ConfigError(f"basis size must be >= 1, got {self.size}")
        if self.family in ("gaussian", "trig") and self.size % 2 == 0:
            raise ConfigError(f"{self.family} family size must be odd, got {self.size}")
        if self.family == "file":
            if self.grid is None or self.table is None:
                raise ConfigError("file basis requires grid and table")
            if self.grid.ndim != 1 or self.table.shape != (self.grid.size, self.size):
                raise ConfigError("file basis table shape must be (len(grid), size)")
            if self.grid.size < 2 or np.any(np.diff(self.grid) <= 0):
                raise ConfigError("file basis grid must be ascending with >= 2 points")
            if not np.all(np.isfinite(self.table)) or np.any(self.table < 0):
                raise ConfigError("file basis values must be finite and non-negative")

    @classmethod
    def bernstein(cls, degree: int) -> "BasisSpec":
        if degree < 0:
            raise ConfigError(f"Bernstein degree must be >= 0, got {degree}")
        return cls("bernstein", degree + 1)

    @classmethod
    def gamma(cls, size: int) -> "BasisSpec":
        return cls("gamma", size)

    @classmethod
    def tophat(cls, size: int) -> "BasisSpec":
        return cls("tophat", size)

    @classmethod
    def gaussian(cls, size: int) -> "BasisSpec":
        return cls("gaussian", size)

    @classmethod
    def trig(cls, size: int) -> "BasisSpec":
        return cls("trig", size)

    @classmethod
    def from_table(cls, grid, table) -> "BasisSpec":
        grid = np.asarray(grid, dtype=float)
        table = np.asarray(table, dtype=float)
        return cls("file", table.shape[1] if table.ndim == 2 else 0, grid=grid, table=table)

    @classmethod
    def from_file(cls, path) -> "BasisSpec":
        """Load a tabulated basis from CSV: first column grid, one column per function."""
        rows = []
        with open(path, newline="") as fh:
            for rownum, rec in enumerate(csv.reader(fh), start=1):
                if not rec or rec[0].lstrip().startswith("#"):
                    continue
                try:
                    rows.append([float(c) for c in rec])
                except ValueError:
                    if rownum == 1:
                        continue  # header row
                    raise ConfigError(f"non-numeric cell in basis file {path} row {rownum}")
        if not rows:
            raise ConfigError(f"basis file {path} holds no numeric rows")
        arr = np.asarray(rows, dtype=float)
        if arr.shape[1] < 2:
            raise ConfigError("basis file needs a grid column plus at least one function column")
        return cls.from_table(arr[:, 0], arr[:, 1:])

    @property
    def degree(self) -> int:
        if self.family != "bernstein":
            raise ConfigError("degree is only defined for the Bernstein family")
        return self.size - 1

    @property
    def domain(self) -> tuple[float, float]:
        if self.family in ("bernstein", "trig"):
            return (0.0, 1.0)
        if self.family == "gamma":
            return (0.0, math.inf)
        if self.family == "tophat":
            return (0.0, float(self.size))
        if self.family == "gaussian":
            return (-math.inf, math.inf)
        return (float(self.grid[0]), float(self.grid[-1]))

    def domain_label(self) -> str:
        if self.family == "trig":
            return "circle [0, 1]"
        lo, hi = self.domain
        return f"[{lo:g}, {hi:g}]"

    def contains(self, x) -> np.ndarray:
        """Boolean mask of which values lie inside the basis domain."""
        x_arr = np.asarray(x, dtype=float)
        ok = np.isfinite(x_arr)
        if self.family == "trig":
            return ok  # circular: any finite x wraps into [0, 1)
        lo, hi = self.domain
        return ok & (x_arr >= lo) & (x_arr <= hi)

    def evaluate(self, t: int, x):
        """Evaluate function t (0-based uniform index) at x."""
        if self.family == "bernstein":
            return bernstein_eval(self.size - 1, t, x)
        if self.family == "gamma":
            return gamma_eval(self.size, t, x)
        if self.family == "tophat":
            return tophat_eval(self.size, t, x)
        if self.family == "gaussian":
            return gaussian_eval(self.size, t - (self.size - 1) // 2, x)
        if self.family == "trig":
            return trig_eval(self.size, t, x)
        if not 0 <= t <= self.size - 1:
            raise DataError(f"index t={t} outside 0..{self.size - 1}")
        x_arr = _asfloat(x)
        lo, hi = self.domain
        if np.any((x_arr < lo) | (x_arr > hi)):
            raise DataError(f"x={x} outside the tabulated domain [{lo:g}, {hi:g}]")
        out = np.interp(x_arr, self.grid, self.table[:, t])
        return _ret(x_arr, out)

    def eval_matrix(self, x) -> np.ndarray:
        """Evaluate the whole family at points x, returning shape (len(x), size)."""
        x_arr = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty((x_arr.size, self.size))
        for t in range(self.size):
            out[:, t] = self.evaluate(t, x_arr)
        return out


def parse_basis_spec(text: str) -> BasisSpec:
    """Parse a basis specification string.

    Grammar: ``bernstein:d=4``, ``gamma:T=5``, ``tophat:T=10``,
    ``gauss:T=7``, ``trig:T=5``, or ``file:<path>`` for a tabulated basis.
    """
    head, sep, rest = text.partition(":")
    head = head.strip().lower()
    if head == "file":
        if not sep or not rest:
            raise ConfigError("file basis needs a path: file:<path>")
        return BasisSpec.from_file(rest.strip())
    keys = {"bernstein": "d", "gamma": "T", "tophat": "T", "gauss": "T", "trig": "T"}
    if head not in keys:
        raise ConfigError(f"unknown basis family {head!r} in {text!r}")
    key, _, val = rest.strip().partition("=")
    if key.strip() != keys[head] or not val:
        raise ConfigError(f"expected {head}:{keys[head]}=<int>, got {text!r}")
    try:
        num = int(val)
    except ValueError:
        raise ConfigError(f"non-integer size in basis spec {text!r}")
    if head == "bernstein":
        return BasisSpec.bernstein(num)
    if head == "gamma":
        return BasisSpec.gamma(num)
    if head == "tophat":
        return BasisSpec.tophat(num)
    if head == "gauss":
        return BasisSpec.gaussian(num)
    return BasisSpec.trig(num)


class PhiTensor:
    """Precomputed basis evaluations phi[i][j][t] = Phi_jt(x_ij).

    Stored as one (N, T_j) matrix per item so per-item linear algebra stays
    contiguous; :meth:`flattened` gives the single (N, S) layout with item
    offsets that the sampling kernel uses.  Immutable after construction
    and safe to share across threads.
    """

    def __init__(self, mats, item_names=None):
        self.mats = []
        n_rows = None
        for j, m in enumerate(mats):
            arr = np.ascontiguousarray(m, dtype=float)
            if arr.ndim != 2:
                raise DataError(f"item {j}: phi block must be 2-D, got shape {arr.shape}")
            if n_rows is None:
                n_rows = arr.shape[0]
            elif arr.shape[0] != n_rows:
                raise DataError("phi blocks disagree on observation count")
            if not np.all(np.isfinite(arr)) or np.any(arr < 0):
                raise DataError(f"item {j}: phi entries must be finite and >= 0")
            arr.setflags(write=False)
            self.mats.append(arr)
        if not self.mats:
            raise DataError("phi tensor needs at least one item")
        self.N = int(n_rows)
        self.M = len(self.mats)
        self.sizes = np.array([m.shape[1] for m in self.mats], dtype=np.int64)
        if item_names is None:
            item_names = tuple(f"item_{j + 1}" for j in range(self.M))
        self.item_names = tuple(item_names)

    def value(self, i: int, j: int, t: int) -> float:
        return float(self.mats[j][i, t])

    def flattened(self):
        """Return (flat, offsets): flat is (N, sum T_j); item j spans
        columns offsets[j]:offsets[j+1]."""
        offsets = np.zeros(self.M + 1, dtype=np.int64)
        np.cumsum(self.sizes, out=offsets[1:])
        flat = np.concatenate(self.mats, axis=1) if self.M > 1 else self.mats[0].copy()
        return np.ascontiguousarray(flat), offsets


def precompute_phi(data, specs) -> PhiTensor:
    """Evaluate every basis function at every datum once.

    ``data`` is a Dataset or a plain (N, M) array; ``specs`` is one
    BasisSpec per item.  Raises DataError naming (i, j, x, domain) if any
    datum falls outside its item's basis domain.
    """
    x = np.asarray(getattr(data, "x", data), dtype=float)
    if x.ndim != 2:
        raise DataError(f"data must be 2-D, got shape {x.shape}")
    n_obs, n_items = x.shape
    if len(specs) != n_items:
        raise DataError(f"{len(specs)} basis specs for {n_items} items")
    names = getattr(data, "item_names", None)
    mats = []
    for j, spec in enumerate(specs):
        col = x[:, j]
        ok = spec.contains(col)
        if not np.all(ok):
            i = int(np.argmin(ok))
            raise DataError(
                f"datum x[{i},{j}]={col[i]!r} outside basis domain {spec.domain_label()}"
            )
        if n_obs == 0:
            mats.append(np.zeros((0, spec.size)))
        else:
            mats.append(spec.eval_matrix(col))
    return PhiTensor(mats, item_names=names)
