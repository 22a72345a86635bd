"""Expectation-maximization fitting of the mixing weights for fixed k.

Works entirely from the precomputed phi tensor.  The E-step computes
component responsibilities q_comp[i, r] and the per-item slot factors
f[i, r, t] = theta[r, t] phi[i, t] / sum_u theta[r, u] phi[i, u], so the
full slot responsibility is q_comp[i, r] * f[i, r, t].  The M-step is the
closed-form update pi_r = mean_i q_comp[i, r] and theta_rjt proportional
to sum_i q_comp[i, r] f[i, r, t].  Every iteration increases the log
marginal posterior of the parameters, so the trace is monotone; the
sampler, not EM, is the tool for choosing k.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from ._errors import ConfigError, DataError
from .basis import PhiTensor

__all__ = [
    "EmParams",
    "Responsibilities",
    "EmFit",
    "e_step",
    "m_step",
    "log_marginal_posterior_em",
    "fit_em",
    "hard_assign",
]


@dataclass(eq=False)
class EmParams:
    """Mixture parameters: component weights pi (k,) and per-item slot
    weights theta, a list of (k, T_j) row-stochastic matrices.

    Row index r-1 of every array corresponds to component label r.
    ``starved`` lists component labels that had to be reset to uniform by
    the producing M-step (zero total responsibility).
    """

    pi: np.ndarray
    theta: list[np.ndarray]
    starved: tuple[int, ...] = ()

    def __post_init__(self):
        self.pi = np.asarray(self.pi, dtype=float)
        self.theta = [np.asarray(t, dtype=float) for t in self.theta]

    @property
    def k(self) -> int:
        return self.pi.shape[0]

    def validate(self, atol: float = 1e-12) -> None:
        if np.any(self.pi < 0) or abs(self.pi.sum() - 1.0) > atol:
            raise DataError("pi must be a probability vector")
        for j, th in enumerate(self.theta):
            if th.shape[0] != self.k:
                raise DataError(f"theta block {j} has {th.shape[0]} rows, expected {self.k}")
            if np.any(th < 0) or np.max(np.abs(th.sum(axis=1) - 1.0)) > atol:
                raise DataError(f"theta block {j} rows must lie on the simplex")

    def permuted(self, perm) -> "EmParams":
        """Relabel components by permutation (perm[r] is the new row of old row r)."""
        perm = np.asarray(perm)
        inv = np.empty_like(perm)
        inv[perm] = np.arange(perm.size)
        return EmParams(self.pi[inv], [t[inv] for t in self.theta])

    def max_abs_diff(self, other: "EmParams") -> float:
        d = float(np.max(np.abs(self.pi - other.pi)))
        for a, b in zip(self.theta, other.theta):
            d = max(d, float(np.max(np.abs(a - b))))
        return d


@dataclass(eq=False)
class Responsibilities:
    """E-step output: q_comp (N, k) with unit row sums, plus per-item slot
    factors (N, k, T_j); q_slot[i, j, r, t] = q_comp[i, r] * slot_factor[j][i, r, t]."""

    q_comp: np.ndarray
    slot_factor: list[np.ndarray]

    def q_slot(self, i: int, j: int) -> np.ndarray:
        """Joint slot responsibility for observation i, item j: shape (k, T_j)."""
        return self.q_comp[i][:, None] * self.slot_factor[j][i]


@dataclass(eq=False)
class EmFit:
    """Result of fit_em: best parameters, final responsibilities, the
    monotone per-iteration log-posterior trace, and convergence status."""

    params: EmParams
    resp: Responsibilities
    log_post: float
    iters: int
    converged: bool
    trace: np.ndarray = field(repr=False)

    def to_json(self) -> str:
        payload = {
            "k": self.params.k,
            "pi": self.params.pi.tolist(),
            "theta": [t.tolist() for t in self.params.theta],
            "log_post": self.log_post,
            "iters": self.iters,
            "converged": self.converged,
            "q_comp": self.resp.q_comp.tolist(),
        }
        return json.dumps(payload)


def _log_component_matrix(phi: PhiTensor, params: EmParams) -> np.ndarray:
    """log [pi_r prod_j sum_t theta_rjt phi_ijt] as an (N, k) matrix."""
    with np.errstate(divide="ignore"):
        log_l = np.broadcast_to(np.log(params.pi), (phi.N, params.k)).copy()
        for j in range(phi.M):
            b = phi.mats[j] @ params.theta[j].T  # (N, k) mixture densities
            log_l += np.log(b)
    return log_l


def e_step(phi: PhiTensor, params: EmParams) -> Responsibilities:
    """Compute responsibilities for the current parameters.

    Log space with per-observation max subtraction, so products over many
    items cannot underflow.  Raises DataError naming the observation if
    some row has zero likelihood under every component.
    """
    if params.k < 1:
        raise ConfigError("need k >= 1")
    log_l = _log_component_matrix(phi, params)
    mx = log_l.max(axis=1)
    dead = ~np.isfinite(mx)
    if np.any(dead):
        i = int(np.argmax(dead))
        raise DataError(
            f"observation {i} has zero likelihood under every component; "
            "basis does not cover this datum"
        )
    q = np.exp(log_l - mx[:, None])
    q /= q.sum(axis=1, keepdims=True)
    factors = []
    for j in range(phi.M):
        num = params.theta[j][None, :, :] * phi.mats[j][:, None, :]  # (N, k, T_j)
        den = num.sum(axis=2, keepdims=True)
        # Where a component gives the observation zero density its q_comp
        # weight is zero, so the factor is arbitrary; keep it uniform.
        uniform = 1.0 / phi.sizes[j]
        factors.append(np.where(den > 0.0, num / np.where(den > 0.0, den, 1.0), uniform))
    return Responsibilities(q, factors)


def m_step(resp: Responsibilities, phi: PhiTensor) -> EmParams:
    """Closed-form maximization given responsibilities.

    A component with zero total responsibility gets uniform theta and is
    reported via EmParams.starved plus a RuntimeWarning; pi and theta rows
    are renormalized to remove rounding drift.
    """
    q = resp.q_comp
    n_eff = q.sum(axis=0)  # (k,)
    pi = n_eff / q.shape[0]
    pi = pi / pi.sum()
    starved = tuple(int(r + 1) for r in np.flatnonzero(n_eff == 0.0))
    if starved:
        warnings.warn(
            f"components {starved} received zero responsibility; theta reset to uniform",
            RuntimeWarning,
            stacklevel=2,
        )
    theta = []
    for j in range(phi.M):
        s = np.einsum("ir,irt->rt", q, resp.slot_factor[j])
        denom = np.where(n_eff > 0.0, n_eff, 1.0)[:, None]
        th = s / denom
        th[n_eff == 0.0] = 1.0 / phi.sizes[j]
        th /= th.sum(axis=1, keepdims=True)
        theta.append(th)
    return EmParams(pi, theta, starved=starved)


def log_marginal_posterior_em(phi: PhiTensor, params: EmParams) -> float:
    """log P(pi, theta | x) up to an additive constant.

    sum_i log sum_r pi_r prod_j sum_t theta_rjt phi_ijt, evaluated with a
    per-observation log-sum-exp.  An observation with zero density under
    every component makes the value -inf, reported as an error.
    """
    log_l = _log_component_matrix(phi, params)
    row = logsumexp(log_l, axis=1)
    if not np.all(np.isfinite(row)):
        i = int(np.argmax(~np.isfinite(row)))
        raise DataError(f"observation {i} has zero marginal likelihood; log posterior is -inf")
    return float(row.sum())


def _init_params(phi: PhiTensor, k: int, rng: np.random.Generator) -> EmParams:
    # pi uniform; theta rows from a flat Dirichlet, one draw per (r, j).
    pi = np.full(k, 1.0 / k)
    theta = [rng.dirichlet(np.ones(tj), size=k) for tj in phi.sizes]
    return EmParams(pi, theta)


def fit_em(
    phi: PhiTensor,
    k: int,
    *,
    max_iter: int = 5000,
    tol: float = 1e-10,
    restarts: int = 1,
    seed: int | None = None,
) -> EmFit:
    """Best-of-restarts EM fit for fixed k.

    Converged when the largest absolute parameter change over one
    (e_step, m_step) pair drops below ``tol``.  The same seed always
    yields the same fit.
    """
    if not 1 <= k <= phi.N:
        raise ConfigError(f"k must be in 1..{phi.N}, got {k}")
    if restarts < 1:
        raise ConfigError(f"restarts must be >= 1, got {restarts}")
    rng = np.random.default_rng(seed)
    best: EmFit | None = None
    for _ in range(restarts):
        params = _init_params(phi, k, rng)
        trace = [log_marginal_posterior_em(phi, params)]
        converged = False
        iters = 0
        for iters in range(1, max_iter + 1):
            resp = e_step(phi, params)
            new_params = m_step(resp, phi)
            delta = new_params.max_abs_diff(params)
            params = new_params
            trace.append(log_marginal_posterior_em(phi, params))
            if delta < tol:
                converged = True
                break
        resp = e_step(phi, params)
        fit = EmFit(
            params=params,
            resp=resp,
            log_post=trace[-1],
            iters=iters,
            converged=converged,
            trace=np.asarray(trace),
        )
        if best is None or fit.log_post > best.log_post:
            best = fit
    return best


def hard_assign(resp: Responsibilities) -> np.ndarray:
    """Most-likely component label (1..k) per observation; ties take the
    smallest label."""
    return np.argmax(resp.q_comp, axis=1).astype(np.int64) + 1
