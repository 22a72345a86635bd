"""Exact brute-force posteriors at tiny scale.

Ground truth for the sampler: enumerate every set partition of the
observations, sum the posterior mass of all slot assignments in closed
per-(block, item) factors, and multiply by k! for the labeled states each
unlabeled partition stands for (observations are distinguishable, so each
labeling is a distinct g with identical weight).  A second, slower path
enumerates labeled assignments directly and is used to validate that
multiplicity reasoning.  A simplex grid search doubles as the oracle for
the iterative MAP-theta estimator.

Everything here is guarded to tiny instances; none of it is meant to
scale.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, logsumexp

from ._errors import ConfigError, GuardError
from .basis import PhiTensor
from .sampler import GibbsState, KPrior, log_joint

__all__ = [
    "ExactPosterior",
    "enumerate_partitions",
    "exact_posterior",
    "exact_posterior_labeled",
    "grid_simplex_optimum",
    "GridOptimum",
]

_MAX_PARTITION_N = 10


def enumerate_partitions(n: int) -> list[list[list[int]]]:
    """All set partitions of observations 0..n-1 into non-empty blocks.

    The count is the Bell number B(n); n is capped at 10.
    """
    if n < 1:
        raise ConfigError(f"need n >= 1, got {n}")
    if n > _MAX_PARTITION_N:
        raise GuardError(f"partition enumeration capped at n={_MAX_PARTITION_N}, got {n}")
    out: list[list[list[int]]] = []

    def rec(i: int, blocks: list[list[int]]) -> None:
        if i == n:
            out.append([list(b) for b in blocks])
            return
        for b in blocks:
            b.append(i)
            rec(i + 1, blocks)
            b.pop()
        blocks.append([i])
        rec(i + 1, blocks)
        blocks.pop()

    rec(0, [])
    return out


@dataclass(eq=False)
class ExactPosterior:
    """Exhaustive posterior summary: P(k), pairwise co-assignment
    probabilities, total log evidence (up to the model constant), and the
    per-partition weights behind them."""

    k_marginal: np.ndarray  # index k; entry 0 unused
    coassign: np.ndarray
    log_evidence: float
    partitions: list = field(repr=False)
    partition_log_weights: np.ndarray = field(repr=False)

    @property
    def partition_probs(self) -> np.ndarray:
        return np.exp(self.partition_log_weights - self.log_evidence)


def _block_item_sum(block, phi_col: np.ndarray) -> float:
    """sum over slot assignments of the block of prod_t m_t! prod_i phi,
    for one item.  Linear space: blocks are <= 7 long and T <= 4, so every
    term is a small product."""
    t_j = phi_col.shape[1]
    total = 0.0
    for assign in itertools.product(range(t_j), repeat=len(block)):
        counts = [0] * t_j
        prod = 1.0
        for i, t in zip(block, assign):
            counts[t] += 1
            prod *= phi_col[i, t]
        for c in counts:
            prod *= math.factorial(c)
        total += prod
    return total


def exact_posterior(phi: PhiTensor, prior: KPrior) -> ExactPosterior:
    """Exact posterior by enumerating partitions, with slot assignments
    summed out in independent per-(block, item) factors.

    Guards: N <= 7, M <= 3, all T_j <= 4.
    """
    n_obs, n_items = phi.N, phi.M
    if n_obs > 7 or n_items > 3 or int(phi.sizes.max()) > 4:
        raise GuardError(
            f"exact posterior capped at N<=7, M<=3, T<=4; got N={n_obs}, M={n_items}, "
            f"T={[int(t) for t in phi.sizes]}"
        )
    partitions = enumerate_partitions(n_obs)
    logw = np.full(len(partitions), -np.inf)
    for p_idx, blocks in enumerate(partitions):
        k = len(blocks)
        lp = prior.log_eval(k)
        if not np.isfinite(lp):
            continue
        # k! labeled states per partition, then the label-count and
        # occupancy factorials of the posterior itself
        lp += gammaln(k + 1) + gammaln(k) + gammaln(n_obs - k + 1)
        for block in blocks:
            n_r = len(block)
            lp += gammaln(n_r + 1)
            for j in range(n_items):
                t_j = int(phi.sizes[j])
                s = _block_item_sum(block, phi.mats[j])
                if s <= 0.0:
                    lp = -np.inf
                    break
                lp += gammaln(t_j) - gammaln(n_r + t_j) + math.log(s)
            if not np.isfinite(lp):
                break
        logw[p_idx] = lp
    log_z = float(logsumexp(logw))
    if not np.isfinite(log_z):
        raise ConfigError("every enumerated state has zero mass; phi is degenerate")
    probs = np.exp(logw - log_z)
    k_marginal = np.zeros(n_obs + 1)
    coassign = np.zeros((n_obs, n_obs))
    for p_idx, blocks in enumerate(partitions):
        w = probs[p_idx]
        k_marginal[len(blocks)] += w
        for block in blocks:
            for a in block:
                for b in block:
                    coassign[a, b] += w
    return ExactPosterior(
        k_marginal=k_marginal,
        coassign=coassign,
        log_evidence=log_z,
        partitions=partitions,
        partition_log_weights=logw,
    )


def exact_posterior_labeled(phi: PhiTensor, prior: KPrior):
    """Direct enumeration over labeled assignments g (all surjections onto
    1..k) and all slot assignments, scored with the sampler's log_joint.

    Returns (weights, k_marginal, coassign) with ``weights`` mapping each
    (k, g) to its log summed-over-h weight.  Exponentially slower than
    :func:`exact_posterior`; guarded to N <= 4 and used only to validate
    the k! multiplicity convention.
    """
    n_obs, n_items = phi.N, phi.M
    if n_obs > 4:
        raise GuardError(f"labeled enumeration capped at N=4, got {n_obs}")
    sizes = [int(t) for t in phi.sizes]
    slot_space = list(itertools.product(*[range(t) for t in sizes]))  # one obs row
    weights: dict[tuple[int, tuple[int, ...]], float] = {}
    for k in range(1, n_obs + 1):
        for g in itertools.product(range(1, k + 1), repeat=n_obs):
            if len(set(g)) != k:
                continue
            parts = []
            for h_rows in itertools.product(slot_space, repeat=n_obs):
                h = np.asarray(h_rows, dtype=np.int64).reshape(n_obs, n_items)
                state = GibbsState.from_gh(np.asarray(g), h, sizes)
                parts.append(log_joint(state, phi, prior))
            weights[(k, g)] = float(logsumexp(np.asarray(parts)))
    all_logw = np.asarray(list(weights.values()))
    log_z = float(logsumexp(all_logw))
    k_marginal = np.zeros(n_obs + 1)
    coassign = np.zeros((n_obs, n_obs))
    for (k, g), lw in weights.items():
        w = math.exp(lw - log_z)
        k_marginal[k] += w
        g_arr = np.asarray(g)
        coassign += (g_arr[:, None] == g_arr[None, :]) * w
    return weights, k_marginal, coassign


@dataclass(frozen=True)
class GridOptimum:
    theta: np.ndarray
    objective: float
    log_objective: float


def grid_simplex_optimum(block_phi, resolution: int = 2000, levels: int = 6) -> GridOptimum:
    """Brute-force maximum of prod_i sum_t theta_t phi_it over the simplex.

    Zooming grid: each level re-grids a shrinking window around the
    incumbent, which is sound because the objective is concave (in log
    form) on the simplex.  Guards: T <= 3; resolution >= 1000 points per
    level.
    """
    block = np.asarray(block_phi, dtype=float)
    if block.ndim != 2 or block.shape[0] < 1:
        raise ConfigError("block_phi must be a non-empty (n, T) array")
    t_dim = block.shape[1]
    if t_dim > 3:
        raise GuardError(f"simplex grid capped at T<=3, got T={t_dim}")
    if resolution < 1000:
        raise ConfigError(f"resolution must be >= 1000 grid points, got {resolution}")
    if t_dim == 1:
        theta = np.ones(1)
        logobj = float(np.log(block[:, 0]).sum())
        return GridOptimum(theta, float(np.exp(logobj)), logobj)

    def log_objective(theta: np.ndarray) -> float:
        dens = block @ theta
        if np.any(dens <= 0.0):
            return -np.inf
        return float(np.log(dens).sum())

    shrink = 8.0
    if t_dim == 2:
        divisions = resolution
        lo, hi = 0.0, 1.0
        best_a, best_val = 0.0, -np.inf
        for _ in range(levels):
            grid = np.linspace(lo, hi, divisions + 1)
            for a in grid:
                val = log_objective(np.array([a, 1.0 - a]))
                if val > best_val:
                    best_val, best_a = val, float(a)
            half = (hi - lo) / shrink
            lo = max(0.0, best_a - half)
            hi = min(1.0, best_a + half)
        theta = np.array([best_a, 1.0 - best_a])
        return GridOptimum(theta, float(np.exp(best_val)), best_val)

    divisions = max(8, int(math.sqrt(2.0 * resolution)))
    win = [(0.0, 1.0), (0.0, 1.0)]
    best_ab, best_val = (0.0, 0.0), -np.inf
    for _ in range(levels):
        grid_a = np.linspace(win[0][0], win[0][1], divisions + 1)
        grid_b = np.linspace(win[1][0], win[1][1], divisions + 1)
        for a in grid_a:
            for b in grid_b:
                c = 1.0 - a - b
                if c < -1e-12:
                    continue
                val = log_objective(np.array([a, b, max(c, 0.0)]))
                if val > best_val:
                    best_val, best_ab = val, (float(a), float(b))
        spans = [(w[1] - w[0]) / shrink for w in win]
        win = [
            (max(0.0, best_ab[d] - spans[d]), min(1.0, best_ab[d] + spans[d]))
            for d in range(2)
        ]
    a, b = best_ab
    theta = np.array([a, b, max(1.0 - a - b, 0.0)])
    return GridOptimum(theta, float(np.exp(best_val)), best_val)
