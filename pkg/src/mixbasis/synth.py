"""Synthetic data generation: draws from a known mixture so that recovery
can be scored against ground truth.

The two benchmark generators build three-group cubic-polynomial mixtures
over three items; group r uses the same three density profiles as group 1
but cyclically shifted across items.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._errors import ConfigError
from .basis import BasisSpec
from .data import Dataset

__all__ = ["SynthSpec", "generate", "synth1_spec", "synth2_spec", "small_spec"]


@dataclass(frozen=True)
class SynthSpec:
    """A fully specified mixture to draw from: group weights, per-group
    per-item slot weights, and the basis family of each item."""

    weights: tuple  # (k,) group weights, summing to 1
    theta: tuple  # per item: (k, T_j) row-stochastic array
    specs: tuple  # per item: BasisSpec
    n: int

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size < 1 or np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
            raise ConfigError("group weights must be a distribution")
        if len(self.theta) != len(self.specs):
            raise ConfigError("one theta block and one basis spec per item")
        if self.n < 1:
            raise ConfigError(f"need n >= 1, got {self.n}")
        for j, (block, spec) in enumerate(zip(self.theta, self.specs)):
            block = np.asarray(block, dtype=float)
            if block.shape != (w.size, spec.size):
                raise ConfigError(
                    f"item {j}: theta shape {block.shape} != ({w.size}, {spec.size})"
                )
            if np.any(block < 0) or np.any(np.abs(block.sum(axis=1) - 1.0) > 1e-9):
                raise ConfigError(f"item {j}: theta rows must lie on the simplex")


def _group_sizes(weights: np.ndarray, n: int) -> np.ndarray:
    # largest-remainder apportionment so equal weights give equal groups
    raw = weights * n
    sizes = np.floor(raw).astype(np.int64)
    short = n - sizes.sum()
    order = np.argsort(-(raw - np.floor(raw)))
    sizes[order[:short]] += 1
    return sizes


def _draw_values(spec: BasisSpec, slots: np.ndarray, rng) -> np.ndarray:
    """Draw one value per entry of `slots` from that slot's basis density."""
    out = np.empty(slots.shape[0])
    big_t = spec.size
    for t in range(big_t):
        mask = slots == t
        cnt = int(mask.sum())
        if cnt == 0:
            continue
        if spec.family == "bernstein":
            d = spec.degree
            out[mask] = rng.beta(t + 1, d - t + 1, size=cnt)
        elif spec.family == "gamma":
            out[mask] = rng.gamma(t + 1, 1.0 / big_t, size=cnt)
        elif spec.family == "tophat":
            out[mask] = rng.uniform(t, t + 1, size=cnt)
        elif spec.family == "gaussian":
            center = t - (big_t - 1) // 2
            out[mask] = rng.normal(center, np.sqrt(abs(center) + 1.0), size=cnt)
        elif spec.family == "trig":
            out[mask] = _draw_trig(spec, t, cnt, rng)
        else:
            raise ConfigError(f"no sampler for basis family {spec.family!r}")
    return out


def _draw_trig(spec: BasisSpec, t: int, cnt: int, rng) -> np.ndarray:
    # rejection from a uniform proposal; the density peaks at x = t/T
    peak = float(spec.evaluate(t, np.asarray([t / spec.size]))[0])
    out = np.empty(cnt)
    filled = 0
    while filled < cnt:
        draw = max(64, 2 * (cnt - filled))
        x = rng.uniform(0.0, 1.0, size=draw)
        keep = x[rng.uniform(0.0, peak, size=draw) < spec.evaluate(t, x)]
        take = min(keep.shape[0], cnt - filled)
        out[filled : filled + take] = keep[:take]
        filled += take
    return out


def generate(spec: SynthSpec, seed: int = 0):
    """Draw a dataset from the mixture.

    Returns (Dataset, g, h): the observations, 1-based true group labels,
    and true slot indices (N, M).  Group sizes are apportioned
    deterministically from the weights; the randomness is in the slot and
    value draws.
    """
    rng = np.random.default_rng(seed)
    weights = np.asarray(spec.weights, dtype=float)
    k = weights.size
    m_items = len(spec.specs)
    sizes = _group_sizes(weights, spec.n)
    g = np.repeat(np.arange(1, k + 1), sizes)
    h = np.empty((spec.n, m_items), dtype=np.int64)
    x = np.empty((spec.n, m_items))
    for j in range(m_items):
        block = np.asarray(spec.theta[j], dtype=float)
        for r in range(k):
            rows = np.flatnonzero(g == r + 1)
            slots = rng.choice(block.shape[1], size=rows.size, p=block[r])
            h[rows, j] = slots
            x[rows, j] = _draw_values(spec.specs[j], slots, rng)
    names = tuple(f"item_{j + 1}" for j in range(m_items))
    return Dataset(x=x, item_names=names), g, h


# Three cubic-polynomial profiles shared by the benchmark mixtures; group r
# assigns profile ((j - r) mod 3) + 1 to item j, so group 1 uses them in
# order and groups 2-3 are cyclic shifts.
_PROFILES_UNIMODAL = (
    (1.0, 0.0, 0.0, 0.0),
    (0.0, 0.5, 0.5, 0.0),
    (0.0, 0.0, 0.0, 1.0),
)
_PROFILES_BIMODAL = (
    (0.5, 0.0, 0.0, 0.5),
    (0.0, 1.0, 0.0, 0.0),
    (0.0, 0.0, 1.0, 0.0),
)


def _cyclic_spec(profiles, n: int) -> SynthSpec:
    k = 3
    specs = tuple(BasisSpec.bernstein(3) for _ in range(3))
    theta = []
    for j in range(3):
        block = np.array([profiles[(j - r) % 3] for r in range(k)])
        theta.append(block)
    return SynthSpec(
        weights=(1 / 3, 1 / 3, 1 / 3), theta=tuple(theta), specs=specs, n=n
    )


def synth1_spec(n: int = 1500) -> SynthSpec:
    """Three equal groups, three items, cubic Bernstein basis; every
    per-item density is unimodal."""
    return _cyclic_spec(_PROFILES_UNIMODAL, n)


def synth2_spec(n: int = 1500) -> SynthSpec:
    """Like synth1_spec but group r's item r density is the bimodal
    half-and-half mix of the two extreme basis functions."""
    return _cyclic_spec(_PROFILES_BIMODAL, n)


def small_spec(n: int = 75) -> SynthSpec:
    """synth1_spec at a small sample size, for sparse-data behavior."""
    return _cyclic_spec(_PROFILES_UNIMODAL, n)
