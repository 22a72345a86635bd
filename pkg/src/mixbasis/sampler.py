"""Collapsed Gibbs sampler over (k, g, h) with the mixing weights
integrated out.

The chain state is the component count k, the component label g_i of every
observation (labels 1..k, every component non-empty), and the slot label
h_ij of every (observation, item) pair.  One Monte Carlo step detaches a
uniformly chosen member of a uniformly chosen component, deletes the
component if that emptied it (relabeling the last component to fill the
gap), then reassigns the observation to one of k existing components or a
fresh one with the closed-form candidate weights, and finally redraws its
slots item by item.  Stationarity under the target posterior is proved by
detailed balance; :func:`transition_log_prob` exposes the move
probabilities so the balance identity is executable in the tests.

This module holds the readable reference implementation plus the run loop
that drives the jit-compiled kernel in ``_kernel``.  Both paths are
checked against the exact enumeration oracle.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, logsumexp

from . import _kernel
from ._errors import ConfigError, DataError, GuardError
from .basis import PhiTensor

__all__ = [
    "KPrior",
    "GibbsState",
    "SampleSet",
    "Move",
    "log_joint",
    "candidate_weights",
    "slot_probs",
    "gibbs_step",
    "run_sampler",
    "transition_log_prob",
    "apply_move",
]

logger = logging.getLogger("mixbasis.sampler")


@dataclass(frozen=True, eq=False)
class KPrior:
    """Prior mass function over the component count k.

    ``uniform(N)`` puts 1/N on each of k = 1..N.  ``from_table(probs)``
    takes explicit masses for k = 1, 2, ...; evaluating a table outside
    its range is an error rather than an implicit zero.
    """

    kind: str
    n: int
    table: np.ndarray | None = None

    @classmethod
    def uniform(cls, n: int) -> "KPrior":
        if n < 1:
            raise ConfigError(f"uniform prior needs N >= 1, got {n}")
        return cls("uniform", n)

    @classmethod
    def from_table(cls, probs) -> "KPrior":
        arr = np.asarray(probs, dtype=float)
        if arr.ndim != 1 or arr.size < 1:
            raise ConfigError("table prior must be a non-empty vector")
        if np.any(arr < 0) or not np.all(np.isfinite(arr)) or arr.sum() <= 0:
            raise ConfigError("table prior entries must be non-negative with positive sum")
        return cls("table", arr.size, table=arr / arr.sum())

    def eval(self, k: int) -> float:
        if self.kind == "uniform":
            return 1.0 / self.n if 1 <= k <= self.n else 0.0
        if not 1 <= k <= self.table.size:
            raise ConfigError(f"table prior covers k = 1..{self.table.size}, asked for k={k}")
        return float(self.table[k - 1])

    def log_eval(self, k: int) -> float:
        p = self.eval(k)
        return float(np.log(p)) if p > 0.0 else -np.inf

    def describe(self) -> str:
        return f"uniform:{self.n}" if self.kind == "uniform" else f"table:{self.n}"


class GibbsState:
    """Chain state (k, g, h) plus the redundant count structures.

    g holds labels 1..k (0 marks a detached observation mid-move); h holds
    slot indices 0..T_j-1.  n[r-1] and m[j][r-1, t] are the occupancy and
    slot counts of component r, and members[r-1] lists its observation
    indices.  The counts always agree with (g, h); ``validate`` checks that
    agreement and the non-empty-component invariant.
    """

    def __init__(self, k, g, h, n, m, members):
        self.k = int(k)
        self.g = np.asarray(g, dtype=np.int64)
        self.h = np.asarray(h, dtype=np.int64)
        self.n = np.asarray(n, dtype=np.int64)
        self.m = [np.asarray(mj, dtype=np.int64) for mj in m]
        self.members = [list(map(int, mem)) for mem in members]

    @property
    def N(self) -> int:
        return self.g.shape[0]

    @property
    def M(self) -> int:
        return self.h.shape[1]

    @classmethod
    def from_gh(cls, g, h, sizes) -> "GibbsState":
        """Build the count structures from assignment vectors.

        Labels must be exactly 1..k with every component non-empty.
        """
        g = np.asarray(g, dtype=np.int64)
        h = np.asarray(h, dtype=np.int64)
        sizes = np.asarray(sizes, dtype=np.int64)
        if g.ndim != 1 or h.ndim != 2 or h.shape[0] != g.shape[0]:
            raise DataError("g must be (N,) and h must be (N, M)")
        if h.shape[1] != sizes.size:
            raise DataError(f"h has {h.shape[1]} items but {sizes.size} sizes given")
        if g.size == 0:
            raise DataError("need at least one observation")
        k = int(g.max())
        if g.min() < 1:
            raise DataError("labels must be >= 1")
        n = np.bincount(g - 1, minlength=k).astype(np.int64)
        if np.any(n == 0):
            raise DataError("every label in 1..k must be used")
        for j in range(sizes.size):
            if h[:, j].min() < 0 or h[:, j].max() >= sizes[j]:
                raise DataError(f"slot labels for item {j} outside 0..{sizes[j] - 1}")
        m = []
        for j in range(sizes.size):
            mj = np.zeros((k, sizes[j]), dtype=np.int64)
            np.add.at(mj, (g - 1, h[:, j]), 1)
            m.append(mj)
        members = [list(np.flatnonzero(g == r + 1)) for r in range(k)]
        return cls(k, g.copy(), h.copy(), n, m, members)

    def copy(self) -> "GibbsState":
        return GibbsState(
            self.k,
            self.g.copy(),
            self.h.copy(),
            self.n.copy(),
            [mj.copy() for mj in self.m],
            [list(mem) for mem in self.members],
        )

    def validate(self) -> None:
        if self.k < 1 or self.k > self.N:
            raise DataError(f"k={self.k} outside 1..{self.N}")
        if np.any(self.n < 1):
            raise DataError("empty component present")
        if self.n.sum() != self.N:
            raise DataError("occupancy counts do not sum to N")
        rebuilt = GibbsState.from_gh(self.g, self.h, [mj.shape[1] for mj in self.m])
        if rebuilt.k != self.k or not np.array_equal(rebuilt.n, self.n):
            raise DataError("counts disagree with assignments")
        for j, mj in enumerate(self.m):
            if not np.array_equal(rebuilt.m[j], mj):
                raise DataError(f"slot counts for item {j} disagree with assignments")
        for r in range(self.k):
            if sorted(self.members[r]) != sorted(rebuilt.members[r]):
                raise DataError(f"membership list for component {r + 1} disagrees with g")

    def detach(self, i: int) -> None:
        """Remove observation i from its component; delete the component if
        emptied, relabeling the last component to take its place."""
        r = int(self.g[i])
        if r == 0:
            raise ConfigError(f"observation {i} is already detached")
        ri = r - 1
        self.g[i] = 0
        self.members[ri].remove(i)
        self.n[ri] -= 1
        for j in range(self.M):
            self.m[j][ri, self.h[i, j]] -= 1
        if self.n[ri] == 0:
            last = self.k - 1
            if ri != last:
                self.n[ri] = self.n[last]
                self.members[ri] = self.members[last]
                for j in range(self.M):
                    self.m[j][ri] = self.m[j][last]
                for obs in self.members[ri]:
                    self.g[obs] = r
            self.n = self.n[:last].copy()
            self.members.pop()
            self.m = [mj[:last].copy() for mj in self.m]
            self.k -= 1

    def attach(self, i: int, s: int, slots) -> None:
        """Assign detached observation i to component s (k+1 creates a new
        one) with the given per-item slots."""
        if int(self.g[i]) != 0:
            raise ConfigError(f"observation {i} is not detached")
        if not 1 <= s <= self.k + 1:
            raise ConfigError(f"component label {s} outside 1..{self.k + 1}")
        if s == self.k + 1:
            self.n = np.append(self.n, 0)
            self.members.append([])
            self.m = [
                np.vstack([mj, np.zeros((1, mj.shape[1]), dtype=np.int64)]) for mj in self.m
            ]
            self.k += 1
        si = s - 1
        self.g[i] = s
        self.members[si].append(i)
        self.n[si] += 1
        for j in range(self.M):
            t = int(slots[j])
            self.h[i, j] = t
            self.m[j][si, t] += 1


def log_joint(state: GibbsState, phi: PhiTensor, prior: KPrior) -> float:
    """Log posterior mass of (k, g, h) up to the model constant.

    log P(k) + log(k-1)! + log(N-k)!
    + sum_r [log n_r! + sum_j (log(T_j-1)! - log(n_r+T_j-1)! + sum_t log m_rjt!)]
    + sum_ij log phi_ij,h_ij,
    with every factorial through log-gamma.  Returns -inf if some assigned
    slot has zero density.
    """
    n_obs = state.N
    k = state.k
    lp = prior.log_eval(k)
    if not np.isfinite(lp):
        return -np.inf
    lp += gammaln(k) + gammaln(n_obs - k + 1)
    for r in range(k):
        n_r = int(state.n[r])
        lp += gammaln(n_r + 1)
        for j in range(phi.M):
            t_j = int(phi.sizes[j])
            lp += gammaln(t_j) - gammaln(n_r + t_j)
            lp += float(gammaln(state.m[j][r] + 1).sum())
    for j in range(phi.M):
        vals = phi.mats[j][np.arange(n_obs), state.h[:, j]]
        if np.any(vals == 0.0):
            return -np.inf
        lp += float(np.log(vals).sum())
    return float(lp)


def partition_log_joint(state: GibbsState, phi: PhiTensor, prior: KPrior) -> float:
    """log_joint plus log k!, the number of labelings sharing the partition.

    The move kernel treats all labelings of a new component as one lumped
    move, so detailed balance holds against this partition-level density
    rather than against the labeled one: transition_log_prob(mu -> nu) -
    transition_log_prob(nu -> mu) = partition_log_joint(nu) -
    partition_log_joint(mu).
    """
    return log_joint(state, phi, prior) + float(gammaln(state.k + 1))


def _candidate_log_weights(state: GibbsState, i: int, phi: PhiTensor, prior: KPrior) -> np.ndarray:
    """Log candidate weights for reassigning detached observation i.

    Entries 0..k-1 are the existing components, entry k is a new one.  For
    the degenerate N = 1 chain (k = 0 after detachment) creation is forced
    and the single weight is 1.
    """
    if int(state.g[i]) != 0:
        raise ConfigError(f"observation {i} must be detached")
    n_obs = state.N
    k = state.k
    if k == 0:
        return np.zeros(1)
    logw = np.empty(k + 1)
    base = np.log((n_obs - k) / k) + prior.log_eval(k)
    for s in range(k):
        acc = base
        for j in range(phi.M):
            t_j = int(phi.sizes[j])
            dot = float(((state.m[j][s] + 1.0) * phi.mats[j][i]).sum())
            with np.errstate(divide="ignore"):
                acc += np.log(dot / (state.n[s] + t_j))
        logw[s] = acc
    acc = np.log(k) + prior.log_eval(k + 1)
    for j in range(phi.M):
        t_j = int(phi.sizes[j])
        with np.errstate(divide="ignore"):
            acc += np.log(float(phi.mats[j][i].sum()) / t_j)
    logw[k] = acc
    return logw


def candidate_weights(state: GibbsState, i: int, phi: PhiTensor, prior: KPrior) -> np.ndarray:
    """Candidate weights w_1..w_k, w_{k+1} for detached observation i.

    w_s = ((N-k)/k) P(k) prod_j [sum_t (m_sjt+1) phi_ijt] / (n_s + T_j) for
    the existing components and w_{k+1} = k P(k+1) prod_j (1/T_j) sum_t
    phi_ijt for a new one, on their natural scale (the internal sampling
    path works with the logs).
    """
    w = np.exp(_candidate_log_weights(state, i, phi, prior))
    if not np.any(w > 0.0):
        raise DataError(
            f"all candidate weights vanish for observation {i}; phi row is degenerate"
        )
    return w


def slot_probs(s: int, i: int, j: int, state: GibbsState, phi: PhiTensor) -> np.ndarray:
    """Slot distribution for observation i, item j on joining component s.

    p(t) is proportional to (m_sjt + 1) phi_ijt for an existing component
    and to phi_ijt for a newly created one (s = k+1); counts exclude i.
    """
    if not 1 <= s <= state.k + 1:
        raise ConfigError(f"component label {s} outside 1..{state.k + 1}")
    row = phi.mats[j][i]
    if s == state.k + 1:
        p = row.astype(float).copy()
    else:
        p = (state.m[j][s - 1] + 1.0) * row
    tot = p.sum()
    if tot <= 0.0:
        raise DataError(f"zero slot normalizer for observation {i}, item {j}")
    return p / tot


def gibbs_step(state: GibbsState, phi: PhiTensor, prior: KPrior, rng: np.random.Generator) -> GibbsState:
    """One Monte Carlo step of the reference implementation, in place.

    Slots are redrawn in ascending item order; the draws are independent,
    so the order is fixed purely for reproducibility.
    """
    r = 1 + int(rng.integers(state.k))
    mem = state.members[r - 1]
    i = mem[int(rng.integers(len(mem)))]
    state.detach(i)
    logw = _candidate_log_weights(state, i, phi, prior)
    p = np.exp(logw - logw.max())
    p /= p.sum()
    nu = 1 + int(rng.choice(p.size, p=p))
    slots = [
        int(rng.choice(phi.sizes[j], p=slot_probs(nu, i, j, state, phi)))
        for j in range(phi.M)
    ]
    state.attach(i, nu, slots)
    return state


@dataclass(frozen=True)
class Move:
    """A single reassignment move: detach observation i, then join either
    the component currently containing observation ``anchor`` (anchor None
    means a new component) with the given per-item slots.

    Anchoring the destination to an observation rather than a label keeps
    the description stable under the relabeling a deletion may trigger.
    """

    i: int
    anchor: int | None
    slots: tuple[int, ...]


def _check_move(state: GibbsState, move: Move, phi: PhiTensor) -> None:
    if not 0 <= move.i < state.N:
        raise ConfigError(f"move observation {move.i} outside 0..{state.N - 1}")
    if int(state.g[move.i]) == 0:
        raise ConfigError(f"observation {move.i} is detached; not a legal move source")
    if move.anchor is not None:
        if not 0 <= move.anchor < state.N or move.anchor == move.i:
            raise ConfigError(f"anchor {move.anchor} is not another observation")
    if len(move.slots) != phi.M:
        raise ConfigError(f"move needs {phi.M} slots, got {len(move.slots)}")
    for j, t in enumerate(move.slots):
        if not 0 <= t < phi.sizes[j]:
            raise ConfigError(f"slot {t} outside 0..{phi.sizes[j] - 1} for item {j}")


def transition_log_prob(state: GibbsState, move: Move, phi: PhiTensor, prior: KPrior) -> float:
    """Log probability that one Monte Carlo step performs ``move`` from
    ``state``: the 1/k component choice, the uniform member choice, the
    normalized candidate weight, and the per-item slot factors.  Moves to a
    new component carry the lumped new-component weight, with no member
    factor for the empty target.  Verification only.
    """
    _check_move(state, move, phi)
    r = int(state.g[move.i])
    lp = -np.log(state.k) - np.log(int(state.n[r - 1]))
    work = state.copy()
    work.detach(move.i)
    logw = _candidate_log_weights(work, move.i, phi, prior)
    if move.anchor is None:
        dest = work.k + 1
    else:
        dest = int(work.g[move.anchor])
        if dest == 0:
            raise ConfigError(f"anchor {move.anchor} is detached")
    lp += float(logw[dest - 1] - logsumexp(logw))
    for j in range(phi.M):
        pj = slot_probs(dest, move.i, j, work, phi)
        with np.errstate(divide="ignore"):
            lp += float(np.log(pj[move.slots[j]]))
    return float(lp)


def apply_move(state: GibbsState, move: Move, phi: PhiTensor) -> GibbsState:
    """Return a copy of ``state`` with ``move`` performed."""
    _check_move(state, move, phi)
    out = state.copy()
    out.detach(move.i)
    dest = out.k + 1 if move.anchor is None else int(out.g[move.anchor])
    if dest == 0:
        raise ConfigError(f"anchor {move.anchor} is detached")
    out.attach(move.i, dest, move.slots)
    return out


@dataclass(eq=False)
class SampleSet:
    """Recorded (k, g, h) snapshots from one chain.

    g rows hold labels 1..k (int16), h rows hold slot indices (int8);
    ``snapshot`` widens back to int64.  The seed, burn-in, stride, and
    prior are carried along so a run is attributable and repeatable.
    """

    k: np.ndarray
    g: np.ndarray
    h: np.ndarray
    sweeps: np.ndarray
    sizes: np.ndarray
    seed: int
    burn_in: int
    stride: int
    prior: str
    init: str = "one"
    steps_per_sec: float = 0.0
    item_names: tuple[str, ...] = ()

    def __len__(self) -> int:
        return int(self.k.shape[0])

    @property
    def N(self) -> int:
        return int(self.g.shape[1])

    @property
    def M(self) -> int:
        return int(self.h.shape[2])

    def snapshot(self, s: int):
        """Sample s as (k, g, h) with native integer dtypes."""
        return (
            int(self.k[s]),
            self.g[s].astype(np.int64),
            self.h[s].astype(np.int64),
        )

    def save_jsonl(self, path, extra_header: dict | None = None) -> None:
        header = {
            "N": self.N,
            "M": self.M,
            "T": [int(t) for t in self.sizes],
            "seed": self.seed,
            "burn_in": self.burn_in,
            "stride": self.stride,
            "prior": self.prior,
            "init": self.init,
        }
        if extra_header:
            header.update(extra_header)
        with open(path, "w") as fh:
            fh.write(json.dumps(header) + "\n")
            for s in range(len(self)):
                rec = {
                    "sweep": int(self.sweeps[s]),
                    "k": int(self.k[s]),
                    "g": self.g[s].tolist(),
                    "h": self.h[s].tolist(),
                }
                fh.write(json.dumps(rec) + "\n")

    @classmethod
    def load_jsonl(cls, path) -> "SampleSet":
        header, records = _read_jsonl(path)
        n_obs, n_items = header["N"], header["M"]
        count = len(records)
        k = np.zeros(count, dtype=np.int64)
        g = np.zeros((count, n_obs), dtype=np.int16)
        h = np.zeros((count, n_obs, n_items), dtype=np.int8)
        sweeps = np.zeros(count, dtype=np.int64)
        for s, rec in enumerate(records):
            k[s] = rec["k"]
            g[s] = rec["g"]
            h[s] = rec["h"]
            sweeps[s] = rec["sweep"]
        return cls(
            k=k,
            g=g,
            h=h,
            sweeps=sweeps,
            sizes=np.asarray(header["T"], dtype=np.int64),
            seed=int(header.get("seed", 0)),
            burn_in=int(header.get("burn_in", 0)),
            stride=int(header.get("stride", 1)),
            prior=str(header.get("prior", "")),
            init=str(header.get("init", "one")),
        )


def _read_jsonl(path):
    header = None
    records = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}: malformed JSON at line {lineno}: {exc}") from None
            if header is None:
                for key in ("N", "M", "T"):
                    if key not in obj:
                        raise DataError(f"{path}: header line missing {key!r}")
                header = obj
            else:
                for key in ("sweep", "k", "g", "h"):
                    if key not in obj:
                        raise DataError(f"{path}: record at line {lineno} missing {key!r}")
                records.append(obj)
    if header is None:
        raise DataError(f"{path}: empty sample file")
    return header, records


def iter_jsonl_samples(path):
    """Stream (sweep, k, g, h) records from a sample file without loading
    everything; g and h come back as int64 arrays."""
    with open(path) as fh:
        first = True
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}: malformed JSON at line {lineno}: {exc}") from None
            if first:
                first = False
                continue
            yield (
                int(obj["sweep"]),
                int(obj["k"]),
                np.asarray(obj["g"], dtype=np.int64),
                np.asarray(obj["h"], dtype=np.int64),
            )


def read_jsonl_header(path) -> dict:
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                return json.loads(line)
    raise DataError(f"{path}: empty sample file")


def initial_state(phi: PhiTensor, init: str, rng: np.random.Generator):
    """Initial (g0, h0) with g0 zero-based; h0 drawn per (i, j) with
    probability proportional to phi, matching the new-component slot law."""
    n_obs = phi.N
    if init == "one":
        g0 = np.zeros(n_obs, dtype=np.int64)
    elif init == "singletons":
        g0 = np.arange(n_obs, dtype=np.int64)
    elif init.startswith("random:"):
        try:
            k0 = int(init.split(":", 1)[1])
        except ValueError:
            raise ConfigError(f"bad init {init!r}; use random:<k>")
        if not 1 <= k0 <= n_obs:
            raise ConfigError(f"random init needs 1 <= k <= {n_obs}, got {k0}")
        g0 = np.concatenate(
            [np.arange(k0), rng.integers(k0, size=n_obs - k0)]
        ).astype(np.int64)
    else:
        raise ConfigError(f"unknown init {init!r}; use one, singletons, or random:<k>")
    h0 = np.zeros((n_obs, phi.M), dtype=np.int64)
    for j in range(phi.M):
        rows = phi.mats[j]
        totals = rows.sum(axis=1)
        if np.any(totals <= 0.0):
            i = int(np.argmax(totals <= 0.0))
            raise DataError(f"observation {i} has zero density for every slot of item {j}")
        cum = np.cumsum(rows, axis=1)
        u = rng.random(n_obs) * totals
        h0[:, j] = (cum < u[:, None]).sum(axis=1)
    return g0, h0


def run_sampler(
    phi: PhiTensor,
    prior: KPrior | None = None,
    *,
    burn_in_sweeps: int = 2500,
    sample_sweeps: int,
    stride: int = 1,
    seed: int = 0,
    init: str = "one",
) -> SampleSet:
    """Run one chain and record a snapshot every ``stride`` sweeps.

    A sweep is N elementary steps.  The burn-in phase is discarded; the
    sampling phase records sample_sweeps // stride snapshots.  The same
    seed always reproduces the same SampleSet bit for bit.  Throughput of
    the sampling phase is reported on the module logger and stored on the
    result.
    """
    n_obs = phi.N
    if prior is None:
        prior = KPrior.uniform(n_obs)
    if sample_sweeps < 1:
        raise ConfigError("nothing to sample: sample_sweeps must be >= 1")
    if stride < 1 or burn_in_sweeps < 0:
        raise ConfigError("stride must be >= 1 and burn_in_sweeps >= 0")
    if n_obs >= 2**15:
        raise GuardError(f"snapshot storage caps N at {2**15 - 1}, got {n_obs}")
    if int(phi.sizes.max()) >= 2**7:
        raise GuardError(f"snapshot storage caps T_j at {2**7 - 1}, got {int(phi.sizes.max())}")

    flat, off = phi.flattened()
    sizes = phi.sizes.astype(np.int64)
    logprior = np.full(n_obs + 2, -np.inf)
    for kk in range(1, n_obs + 1):
        logprior[kk] = prior.log_eval(kk)
    with np.errstate(divide="ignore"):
        lognewfac = np.log(
            np.column_stack([phi.mats[j].sum(axis=1) / sizes[j] for j in range(phi.M)])
        ).sum(axis=1)
    if not np.all(np.isfinite(lognewfac)):
        i = int(np.argmax(~np.isfinite(lognewfac)))
        raise DataError(f"observation {i} has zero total density for some item")

    rng = np.random.default_rng(seed)
    g0, h0 = initial_state(phi, init, rng)
    k0 = int(g0.max()) + 1
    cap = min(max(16, k0 + 1), n_obs)
    n0 = np.zeros(cap, dtype=np.int64)
    m0 = np.zeros((cap, int(sizes.sum())), dtype=np.float64)
    members0 = np.zeros((cap, n_obs), dtype=np.int64)
    for i in range(n_obs):
        r = g0[i]
        members0[r, n0[r]] = i
        n0[r] += 1
        for j in range(phi.M):
            m0[r, off[j] + h0[i, j]] += 1.0

    st = np.array([seed], dtype=np.uint64)
    n_snap = sample_sweeps // stride
    ksnap = np.zeros(n_snap, dtype=np.int64)
    gsnap = np.zeros((n_snap, n_obs), dtype=np.int16)
    hsnap = np.zeros((n_snap, n_obs, phi.M), dtype=np.int8)

    # Burn-in call first: it also absorbs jit compilation, so the timed
    # sampling call below measures steady-state throughput.
    k, n_arr, m_arr, members_arr = _kernel._run_chain(
        k0, g0, h0, n0, m0, members0, flat, off, sizes, logprior, lognewfac, st,
        burn_in_sweeps * n_obs, 0,
        1, np.zeros(0, dtype=np.int64), np.zeros((0, n_obs), dtype=np.int16),
        np.zeros((0, n_obs, phi.M), dtype=np.int8),
    )
    t0 = time.perf_counter()
    k, n_arr, m_arr, members_arr = _kernel._run_chain(
        k, g0, h0, n_arr, m_arr, members_arr, flat, off, sizes, logprior, lognewfac, st,
        0, n_snap, stride * n_obs, ksnap, gsnap, hsnap,
    )
    elapsed = time.perf_counter() - t0
    total_steps = n_snap * stride * n_obs
    sps = total_steps / elapsed if elapsed > 0 else float("inf")
    logger.info(
        "sampled %d steps in %.3f s (%.3g steps/s), final k=%d",
        total_steps, elapsed, sps, k,
    )
    sweeps = burn_in_sweeps + stride * (1 + np.arange(n_snap, dtype=np.int64))
    return SampleSet(
        k=ksnap,
        g=gsnap,
        h=hsnap,
        sweeps=sweeps,
        sizes=sizes,
        seed=seed,
        burn_in=burn_in_sweeps,
        stride=stride,
        prior=prior.describe(),
        init=init,
        steps_per_sec=sps,
        item_names=phi.item_names,
    )


def run_reference_chain(
    phi: PhiTensor,
    prior: KPrior | None = None,
    *,
    steps: int,
    seed: int = 0,
    init: str = "one",
    record_every: int = 1,
):
    """Drive the pure reference implementation for a fixed number of steps,
    recording (k, g, h) every ``record_every`` steps.  Slow; used to check
    the kernel and the reference path sample the same posterior."""
    if prior is None:
        prior = KPrior.uniform(phi.N)
    rng = np.random.default_rng(seed)
    g0, h0 = initial_state(phi, init, rng)
    state = GibbsState.from_gh(g0 + 1, h0, phi.sizes)
    out = []
    for step in range(steps):
        gibbs_step(state, phi, prior, rng)
        if (step + 1) % record_every == 0:
            out.append((state.k, state.g.copy(), state.h.copy()))
    return out
