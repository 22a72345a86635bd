"""Jit-compiled Monte Carlo core for the collapsed Gibbs sampler.

Hot path only.  State lives in flat preallocated arrays: component labels
g (0-based here; public structures use 1-based labels), slot labels h,
occupancy n, slot counts m flattened over items, and a membership table
with swap-remove deletion so every move is O(k M T).  Weights are
accumulated as linear products with a rescaling exponent and a single log
per candidate.  Randomness comes from an explicit splitmix64 stream so
runs are bit-reproducible and independent of numpy's global state.

The readable reference implementation lives in sampler.py; the suite
cross-checks the two against the exact enumeration oracle.
"""

import numpy as np
from numba import njit

_GOLD = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0  # 2**-53
_RESCALE = 1e-280
_RESCALE_INV = 1e280
_LOG_RESCALE = 280.0 * np.log(10.0)


@njit(cache=True, inline="always")
def _next_u64(st):
    st[0] = st[0] + _GOLD
    z = st[0]
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return z ^ (z >> _S31)


@njit(cache=True, inline="always")
def _u01(st):
    return (_next_u64(st) >> _S11) * _INV53


@njit(cache=True)
def _mc_step(k, g, h, n, m, members, phi, off, sizes, logprior, lognewfac, st, logw):
    N = g.shape[0]
    M = sizes.shape[0]

    # steps 1-2: uniform component, uniform member
    r = int(_u01(st) * k)
    if r >= k:
        r = k - 1
    p = int(_u01(st) * n[r])
    if p >= n[r]:
        p = n[r] - 1
    i = members[r, p]

    # step 3: detach i (swap-remove keeps rows dense)
    n[r] -= 1
    members[r, p] = members[r, n[r]]
    for j in range(M):
        m[r, off[j] + h[i, j]] -= 1.0

    # step 4: emptied component dies; the last component takes label r so
    # rows 0..k-1 stay the live ones and rows >= k stay zeroed
    if n[r] == 0:
        k -= 1
        if r != k:
            cnt = n[k]
            for q in range(cnt):
                obs = members[k, q]
                members[r, q] = obs
                g[obs] = r
            n[r] = cnt
            n[k] = 0
            for c in range(m.shape[1]):
                m[r, c] = m[k, c]
                m[k, c] = 0.0

    # step 5: candidate log-weights; k here is the post-removal count
    if k > 0:
        base = np.log((N - k) / k) + logprior[k]
        for s in range(k):
            prod = 1.0
            sc = 0
            for j in range(M):
                o = off[j]
                tj = sizes[j]
                dot = 0.0
                for t in range(tj):
                    dot += (m[s, o + t] + 1.0) * phi[i, o + t]
                prod *= dot / (n[s] + tj)
                if prod < _RESCALE:
                    prod *= _RESCALE_INV
                    sc += 1
                elif prod > _RESCALE_INV:
                    prod *= _RESCALE
                    sc -= 1
            logw[s] = base + np.log(prod) - sc * _LOG_RESCALE
        logw[k] = np.log(k) + logprior[k + 1] + lognewfac[i]
    else:
        logw[0] = 0.0  # sole observation detached: creation is forced

    # step 6: categorical draw over k+1 candidates
    mx = logw[0]
    for s in range(1, k + 1):
        if logw[s] > mx:
            mx = logw[s]
    tot = 0.0
    for s in range(k + 1):
        logw[s] = np.exp(logw[s] - mx)
        tot += logw[s]
    u = _u01(st) * tot
    nu = 0
    csum = logw[0]
    while csum < u and nu < k:
        nu += 1
        csum += logw[nu]

    # step 7: attach and resample slots item by item; a fresh component has
    # a zeroed m row, so (m + 1) phi is phi itself, as the new-component
    # law requires
    if nu == k:
        k += 1
    g[i] = nu
    members[nu, n[nu]] = i
    n[nu] += 1
    for j in range(M):
        o = off[j]
        tj = sizes[j]
        tot = 0.0
        for t in range(tj):
            tot += (m[nu, o + t] + 1.0) * phi[i, o + t]
        u = _u01(st) * tot
        tsel = 0
        csum = (m[nu, o] + 1.0) * phi[i, o]
        while csum < u and tsel < tj - 1:
            tsel += 1
            csum += (m[nu, o + tsel] + 1.0) * phi[i, o + tsel]
        h[i, j] = tsel
        m[nu, o + tsel] += 1.0
    return k


@njit(cache=True)
def _grow(n, m, members, newcap):
    cap = n.shape[0]
    n2 = np.zeros(newcap, np.int64)
    m2 = np.zeros((newcap, m.shape[1]), np.float64)
    mem2 = np.zeros((newcap, members.shape[1]), np.int64)
    n2[:cap] = n
    m2[:cap] = m
    mem2[:cap] = members
    return n2, m2, mem2


@njit(cache=True)
def _run_chain(
    k, g, h, n, m, members, phi, off, sizes, logprior, lognewfac, st,
    burn_steps, n_snap, stride_steps, ksnap, gsnap, hsnap,
):
    N = g.shape[0]
    M = sizes.shape[0]
    logw = np.empty(N + 1, np.float64)
    for _ in range(burn_steps):
        k = _mc_step(k, g, h, n, m, members, phi, off, sizes, logprior, lognewfac, st, logw)
        if n.shape[0] < k + 1 and n.shape[0] < N:
            newcap = min(max(2 * n.shape[0], k + 1), N)
            n, m, members = _grow(n, m, members, newcap)
    for s in range(n_snap):
        for _ in range(stride_steps):
            k = _mc_step(k, g, h, n, m, members, phi, off, sizes, logprior, lognewfac, st, logw)
            if n.shape[0] < k + 1 and n.shape[0] < N:
                newcap = min(max(2 * n.shape[0], k + 1), N)
                n, m, members = _grow(n, m, members, newcap)
        ksnap[s] = k
        for i in range(N):
            gsnap[s, i] = g[i] + 1
            for j in range(M):
                hsnap[s, i, j] = h[i, j]
    return k, n, m, members
