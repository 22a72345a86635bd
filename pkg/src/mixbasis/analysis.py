"""Posterior post-processing: MAP component count, consensus clustering,
MAP mixing weights, density reconstruction, and mutual-information
variable ranking.

Raw component labels are not identifiable (the posterior is invariant
under relabeling), so everything here is built from label-free summaries:
the histogram of sampled k, the co-assignment fraction C_ij, per-sample
count tables, and mutual information between component and slot labels.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy.optimize import linear_sum_assignment

from ._errors import ConfigError, DataError
from .basis import BasisSpec, PhiTensor

__all__ = [
    "ConsensusMatrix",
    "DensityCurve",
    "MIRanking",
    "k_histogram",
    "map_k",
    "consensus_matrix",
    "consensus_select",
    "stream_consensus",
    "stream_select",
    "theta_map_from_gh",
    "theta_map_from_g",
    "density_curve",
    "mutual_information",
    "mutual_information_all",
    "permuted_accuracy",
    "best_label_mapping",
]


@dataclass(eq=False)
class ConsensusMatrix:
    """Co-assignment fractions C_ij over a sample set; symmetric, unit
    diagonal, entries in [0, 1]."""

    C: np.ndarray
    n_samples: int


@dataclass(eq=False)
class DensityCurve:
    """A reconstructed per-(component, item) density on a plotting grid."""

    grid: np.ndarray
    values: np.ndarray
    component: int = 0
    item: int = 0

    def integral(self) -> float:
        return float(np.trapezoid(self.values, self.grid))


@dataclass(eq=False)
class MIRanking:
    """Average mutual information between component and slot labels, per
    item, in bits; per-sample values and slot occupancy counts retained."""

    item_names: tuple[str, ...]
    bits: np.ndarray  # (M,)
    per_sample: np.ndarray = field(repr=False)  # (S, M)
    slot_counts: list = field(repr=False)  # per item: (S, T_j)


def _k_values(samples) -> np.ndarray:
    ks = np.asarray(samples.k if hasattr(samples, "k") else samples, dtype=np.int64)
    if ks.size == 0:
        raise DataError("empty sample set")
    return ks


def k_histogram(samples) -> dict[int, float]:
    """Normalized histogram of the sampled component counts."""
    ks = _k_values(samples)
    vals, counts = np.unique(ks, return_counts=True)
    return {int(v): float(c) / ks.size for v, c in zip(vals, counts)}


def map_k(samples) -> int:
    """Most frequently sampled k; ties go to the smaller value."""
    hist = k_histogram(samples)
    best = max(hist.items(), key=lambda kv: (kv[1], -kv[0]))
    return int(best[0])


@njit(cache=True)
def _coassign_upper(g, acc):
    n = g.shape[0]
    for i in range(n):
        gi = g[i]
        for j in range(i + 1, n):
            if g[j] == gi:
                acc[i, j] += 1.0


@njit(cache=True)
def _within_stats(g, c):
    # sum of C_ij over same-component pairs i<j, and the pair count
    n = g.shape[0]
    s = 0.0
    cnt = 0
    for i in range(n):
        gi = g[i]
        for j in range(i + 1, n):
            if g[j] == gi:
                s += c[i, j]
                cnt += 1
    return s, cnt


def stream_consensus(g_iter, n_obs: int) -> ConsensusMatrix:
    """Accumulate the co-assignment matrix from an iterable of label
    vectors, holding only C and one row in memory."""
    acc = np.zeros((n_obs, n_obs))
    count = 0
    for g in g_iter:
        _coassign_upper(np.ascontiguousarray(g, dtype=np.int64), acc)
        count += 1
    if count == 0:
        raise DataError("empty sample set")
    acc /= count
    c = acc + acc.T
    np.fill_diagonal(c, 1.0)
    return ConsensusMatrix(C=c, n_samples=count)


def consensus_matrix(samples) -> ConsensusMatrix:
    """Co-assignment fractions C_ij = fraction of samples with g_i = g_j."""
    if len(samples) == 0:
        raise DataError("empty sample set")
    return stream_consensus((samples.g[s] for s in range(len(samples))), samples.N)


def stream_select(g_iter, cm: ConsensusMatrix) -> int:
    """Index of the sample whose own co-assignment matrix has the smallest
    mean-square distance from C over unordered pairs i < j; ties go to the
    earliest sample.  Second pass of the streaming pipeline."""
    c = cm.C
    n_obs = c.shape[0]
    n_pairs = n_obs * (n_obs - 1) // 2
    if n_pairs == 0:
        return 0
    sum_c2 = float(np.sum(np.triu(c, 1) ** 2))
    best_idx, best_d = -1, np.inf
    for idx, g in enumerate(g_iter):
        s, cnt = _within_stats(np.ascontiguousarray(g, dtype=np.int64), c)
        # mean over pairs of ([same] - C)^2, expanded around the C-only term
        d = (sum_c2 - 2.0 * s + cnt) / n_pairs
        if d < best_d:
            best_d, best_idx = d, idx
    if best_idx < 0:
        raise DataError("empty sample set")
    return best_idx


def consensus_select(samples, cm: ConsensusMatrix) -> int:
    """Representative sample: argmin mean-square distance from C."""
    return stream_select((samples.g[s] for s in range(len(samples))), cm)


def theta_map_from_gh(g, h, sizes) -> list[np.ndarray]:
    """MAP mixing weights from a single (g, h) sample: theta_rjt =
    m_rjt / n_r, one (k, T_j) row-stochastic block per item."""
    g = np.asarray(g, dtype=np.int64)
    h = np.asarray(h, dtype=np.int64)
    sizes = np.asarray(sizes, dtype=np.int64)
    k = int(g.max())
    n = np.bincount(g - 1, minlength=k)
    if np.any(n == 0) or g.min() < 1:
        raise DataError("labels must cover 1..k with no empty component")
    theta = []
    for j in range(sizes.size):
        m = np.zeros((k, sizes[j]))
        np.add.at(m, (g - 1, h[:, j]), 1.0)
        theta.append(m / n[:, None])
    return theta


def theta_map_from_g(
    g, phi: PhiTensor, *, tol: float = 1e-10, max_iter: int = 10000
) -> list[np.ndarray]:
    """MAP mixing weights from component labels alone.

    Per (component, item) the objective prod_{i in r} sum_t theta_t phi_it
    is maximized by the fixed-point iteration q_t = theta_t phi_it /
    sum_u theta_u phi_iu, theta_t = mean_i q_t from a uniform start; the
    objective is concave on the simplex so the iteration reaches the
    global optimum.
    """
    g = np.asarray(g, dtype=np.int64)
    if g.shape[0] != phi.N:
        raise DataError(f"{g.shape[0]} labels for {phi.N} observations")
    k = int(g.max())
    if g.min() < 1 or np.any(np.bincount(g - 1, minlength=k) == 0):
        raise DataError("labels must cover 1..k with no empty component")
    theta = []
    for j in range(phi.M):
        t_j = int(phi.sizes[j])
        block = np.zeros((k, t_j))
        for r in range(k):
            rows = phi.mats[j][g == r + 1]
            th = np.full(t_j, 1.0 / t_j)
            for _ in range(max_iter):
                dens = rows @ th
                if np.any(dens <= 0.0):
                    i_local = int(np.argmax(dens <= 0.0))
                    i = int(np.flatnonzero(g == r + 1)[i_local])
                    raise DataError(
                        f"zero mixture density for observation {i}, item {j}"
                    )
                new = (rows / dens[:, None]).mean(axis=0) * th
                new /= new.sum()
                delta = float(np.max(np.abs(new - th)))
                th = new
                if delta < tol:
                    break
            block[r] = th
        theta.append(block)
    return theta


def density_curve(theta_rj, spec: BasisSpec, grid) -> DensityCurve:
    """Mixture density sum_t theta_t Phi_t over a grid of domain points."""
    theta = np.asarray(theta_rj, dtype=float)
    if theta.ndim != 1 or theta.shape[0] != spec.size:
        raise DataError(f"theta must have {spec.size} entries, got shape {theta.shape}")
    if np.any(theta < 0) or abs(theta.sum() - 1.0) > 1e-9:
        raise DataError("theta must lie on the probability simplex")
    grid = np.asarray(grid, dtype=float)
    ok = spec.contains(grid)
    if not np.all(ok):
        p = int(np.argmin(ok))
        raise DataError(f"grid point {grid[p]!r} outside basis domain {spec.domain_label()}")
    values = spec.eval_matrix(grid) @ theta
    return DensityCurve(grid=grid, values=values)


def _mi_bits(m: np.ndarray) -> float:
    """Mutual information of a joint count table, in bits; 0 log 0 = 0."""
    total = m.sum()
    if total <= 0:
        return 0.0
    rows = m.sum(axis=1, keepdims=True)
    cols = m.sum(axis=0, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = m * np.log2(total * m / (rows * cols))
    return float(np.where(m > 0, terms, 0.0).sum() / total)


def mutual_information(samples, item: int) -> float:
    """Average over samples of the mutual information between component
    labels and slot labels for one item, in bits."""
    vals = []
    t_j = int(samples.sizes[item])
    for s in range(len(samples)):
        k, g, h = samples.snapshot(s)
        m = np.zeros((k, t_j))
        np.add.at(m, (g - 1, h[:, item]), 1.0)
        vals.append(_mi_bits(m))
    if not vals:
        raise DataError("empty sample set")
    return float(np.mean(vals))


def mutual_information_all(samples) -> MIRanking:
    """Per-item average mutual information plus the per-sample values."""
    n_samp = len(samples)
    if n_samp == 0:
        raise DataError("empty sample set")
    n_items = samples.M
    per_sample = np.zeros((n_samp, n_items))
    slot_counts = [np.zeros((n_samp, int(samples.sizes[j]))) for j in range(n_items)]
    for s in range(n_samp):
        k, g, h = samples.snapshot(s)
        for j in range(n_items):
            t_j = int(samples.sizes[j])
            m = np.zeros((k, t_j))
            np.add.at(m, (g - 1, h[:, j]), 1.0)
            per_sample[s, j] = _mi_bits(m)
            slot_counts[j][s] = m.sum(axis=0)
    names = samples.item_names or tuple(f"item_{j + 1}" for j in range(n_items))
    return MIRanking(
        item_names=tuple(names),
        bits=per_sample.mean(axis=0),
        per_sample=per_sample,
        slot_counts=slot_counts,
    )


def _confusion(pred, truth):
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape or pred.ndim != 1:
        raise DataError("label vectors must be 1-D and the same length")
    pu, pi = np.unique(pred, return_inverse=True)
    tu, ti = np.unique(truth, return_inverse=True)
    conf = np.zeros((pu.size, tu.size), dtype=np.int64)
    np.add.at(conf, (pi, ti), 1)
    return conf, pu, tu


def permuted_accuracy(pred, truth) -> float:
    """Best agreement fraction over relabelings of the predicted labels.

    Exhaustive over permutations up to 10 distinct labels, Hungarian-style
    assignment beyond that.
    """
    conf, pu, tu = _confusion(pred, truth)
    total = conf.sum()
    side = max(pu.size, tu.size)
    square = np.zeros((side, side), dtype=np.int64)
    square[: pu.size, : tu.size] = conf
    if side <= 10:
        best = max(
            sum(square[r, perm[r]] for r in range(side))
            for perm in itertools.permutations(range(side))
        )
    else:
        rows, cols = linear_sum_assignment(square, maximize=True)
        best = int(square[rows, cols].sum())
    return float(best) / float(total)


def best_label_mapping(pred, truth) -> dict:
    """Optimal predicted-label -> truth-label mapping under the same
    matching as permuted_accuracy."""
    conf, pu, tu = _confusion(pred, truth)
    side = max(pu.size, tu.size)
    square = np.zeros((side, side), dtype=np.int64)
    square[: pu.size, : tu.size] = conf
    rows, cols = linear_sum_assignment(square, maximize=True)
    mapping = {}
    for r, c in zip(rows, cols):
        if r < pu.size and c < tu.size:
            mapping[pu[r].item()] = tu[c].item()
    return mapping
