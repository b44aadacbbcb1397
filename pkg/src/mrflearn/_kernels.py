"""Jitted inner loops for the samplers.

Every kernel replays the exact draw protocol of the pure-python step
functions in `chain`: step s of a stream consumes draws 3s, 3s+1, 3s+2
(site, laziness, move), and uniform spin initialization consumes draws
0..n-1 before the walk starts. The RNG is the same splitmix64 arithmetic
as `rng.draw_u64`, so a kernel handed (seed, counter0) produces bit-identical
trajectories to looping the python step function. Tests assert this.

Because a draw is a pure function of (seed, counter), the kernels test the
laziness draw first and skip computing the site and move draws on lazy
steps; the counter still advances by 3, so trajectories are unchanged.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

U64 = np.uint64
_GAMMA = U64(0x9E3779B97F4A7C15)
_C1 = U64(0xBF58476D1CE4E9B5)
_C2 = U64(0x94D049BB133111EB)
_ONE = U64(1)
_S30 = U64(30)
_S27 = U64(27)
_S31 = U64(31)
_S11 = U64(11)
_TWO_NEG53 = 2.0**-53


@njit(cache=True, inline="always")
def _draw01(seed, counter):
    z = seed + (counter + _ONE) * _GAMMA
    z = (z ^ (z >> _S30)) * _C1
    z = (z ^ (z >> _S27)) * _C2
    z = z ^ (z >> _S31)
    return np.float64(z >> _S11) * _TWO_NEG53


@njit(cache=True, inline="always")
def _ising_step_inplace(offsets, idx, beta, b_field, x, seed, c0):
    lazy = _draw01(seed, c0 + _ONE)
    if lazy < 0.5:
        return
    n = x.shape[0]
    i = int(_draw01(seed, c0) * n)
    field = b_field
    for k in range(offsets[i], offsets[i + 1]):
        field += beta[k] * x[idx[k]]
    p_flip = 1.0 / (1.0 + math.exp(2.0 * x[i] * field))
    if _draw01(seed, c0 + U64(2)) < p_flip:
        x[i] = -x[i]


@njit(cache=True, inline="always")
def _coloring_step_inplace(offsets, idx, q, x, seed, c0):
    lazy = _draw01(seed, c0 + _ONE)
    if lazy < 0.5:
        return
    n = x.shape[0]
    i = int(_draw01(seed, c0) * n)
    if q <= 64:
        # colors fit a word: one pass over neighbors, two over colors
        used = U64(0)
        for k in range(offsets[i], offsets[i + 1]):
            used |= _ONE << U64(x[idx[k]])
        cnt = 0
        for c in range(q):
            if ((used >> U64(c)) & _ONE) == U64(0):
                cnt += 1
        if cnt == 0:
            return
        target = int(_draw01(seed, c0 + U64(2)) * cnt)
        seen = 0
        for c in range(q):
            if ((used >> U64(c)) & _ONE) == U64(0):
                if seen == target:
                    x[i] = c
                    return
                seen += 1
        return
    cnt = 0
    for c in range(q):
        ok = True
        for k in range(offsets[i], offsets[i + 1]):
            if x[idx[k]] == c:
                ok = False
                break
        if ok:
            cnt += 1
    if cnt == 0:
        return
    target = int(_draw01(seed, c0 + U64(2)) * cnt)
    seen = 0
    for c in range(q):
        ok = True
        for k in range(offsets[i], offsets[i + 1]):
            if x[idx[k]] == c:
                ok = False
                break
        if ok:
            if seen == target:
                x[i] = c
                return
            seen += 1


@njit(cache=True, inline="always")
def _cube_step_inplace(x, seed, c0):
    lazy = _draw01(seed, c0 + _ONE)
    if lazy < 0.5:
        return
    n = x.shape[0]
    i = int(_draw01(seed, c0) * n)
    x[i] = -x[i]


@njit(cache=True, nogil=True)
def ising_walk(offsets, idx, beta, b_field, x0, length, seed, counter0):
    n = x0.shape[0]
    seed = U64(seed)
    out = np.empty((length, n), dtype=np.int8)
    x = x0.copy()
    out[0] = x
    c = U64(counter0)
    for s in range(1, length):
        _ising_step_inplace(offsets, idx, beta, b_field, x, seed, c)
        c += U64(3)
        out[s] = x
    return out


@njit(cache=True, nogil=True)
def coloring_walk(offsets, idx, q, x0, length, seed, counter0):
    n = x0.shape[0]
    seed = U64(seed)
    out = np.empty((length, n), dtype=np.int8)
    x = x0.copy()
    out[0] = x
    c = U64(counter0)
    for s in range(1, length):
        _coloring_step_inplace(offsets, idx, q, x, seed, c)
        c += U64(3)
        out[s] = x
    return out


@njit(cache=True, nogil=True)
def cube_walk(x0, length, seed, counter0):
    n = x0.shape[0]
    seed = U64(seed)
    out = np.empty((length, n), dtype=np.int8)
    x = x0.copy()
    out[0] = x
    c = U64(counter0)
    for s in range(1, length):
        _cube_step_inplace(x, seed, c)
        c += U64(3)
        out[s] = x
    return out


@njit(cache=True, nogil=True)
def ising_endpoints(offsets, idx, beta, b_field, starts, t, seeds, counter0):
    rows = starts.shape[0]
    out = starts.copy()
    for r in range(rows):
        x = out[r]
        s = U64(seeds[r])
        c = U64(counter0)
        for _ in range(t):
            _ising_step_inplace(offsets, idx, beta, b_field, x, s, c)
            c += U64(3)
    return out


@njit(cache=True, nogil=True)
def coloring_endpoints(offsets, idx, q, starts, t, seeds, counter0):
    rows = starts.shape[0]
    out = starts.copy()
    for r in range(rows):
        x = out[r]
        s = U64(seeds[r])
        c = U64(counter0)
        for _ in range(t):
            _coloring_step_inplace(offsets, idx, q, x, s, c)
            c += U64(3)
    return out


@njit(cache=True, nogil=True)
def cube_endpoints(starts, t, seeds, counter0):
    rows = starts.shape[0]
    out = starts.copy()
    for r in range(rows):
        x = out[r]
        s = U64(seeds[r])
        c = U64(counter0)
        for _ in range(t):
            _cube_step_inplace(x, s, c)
            c += U64(3)
    return out


@njit(cache=True, nogil=True)
def walk_transition_audit(states, labels):
    """Classify the transitions of a labeled walk in one pass.

    Returns (status, where, info, site_hits, witnesses):
      status 0: every step changes <= 1 coordinate and labels only move
                with a coordinate; site_hits[i] counts label-changing
                steps that flipped coordinate i, witnesses their total.
      status 1: step `where` changed `info` coordinates.
      status 2: step `where` changed the label with no coordinate change.
    """
    steps, n = states.shape[0] - 1, states.shape[1]
    site_hits = np.zeros(n, dtype=np.int64)
    witnesses = 0
    for s in range(steps):
        changed = 0
        site = -1
        for i in range(n):
            if states[s + 1, i] != states[s, i]:
                changed += 1
                site = i
        if changed > 1:
            return 1, s, changed, site_hits, witnesses
        if labels[s + 1] != labels[s]:
            if changed == 0:
                return 2, s, 0, site_hits, witnesses
            site_hits[site] += 1
            witnesses += 1
    return 0, -1, 0, site_hits, witnesses


@njit(cache=True, nogil=True)
def junta_code_counts(states, labels, sites, q):
    """Plurality counts over states restricted to `sites`.

    Codes are big-endian base-q over the site list; spins map through
    (x+1)/2 when q == 2. Returns (ups, totals) of length q**len(sites).
    """
    rows = states.shape[0]
    k = sites.shape[0]
    cells = 1
    for _ in range(k):
        cells *= q
    ups = np.zeros(cells, dtype=np.int64)
    totals = np.zeros(cells, dtype=np.int64)
    for r in range(rows):
        code = 0
        for j in range(k):
            v = states[r, sites[j]]
            if q == 2:
                v = (v + 1) // 2
            code = code * q + v
        totals[code] += 1
        if labels[r] == 1:
            ups[code] += 1
    return ups, totals


@njit(cache=True, nogil=True)
def junta_eval_rows(states, sites, dense, q):
    """Label each row by a dense truth table indexed like junta_code_counts."""
    rows = states.shape[0]
    k = sites.shape[0]
    out = np.empty(rows, dtype=np.int8)
    for r in range(rows):
        code = 0
        for j in range(k):
            v = states[r, sites[j]]
            if q == 2:
                v = (v + 1) // 2
            code = code * q + v
        out[r] = dense[code]
    return out


@njit(cache=True, nogil=True)
def random_spin_rows(n, seeds):
    """Row r holds n spins from draws 0..n-1 of seeds[r]; -1 below 1/2."""
    rows = seeds.shape[0]
    out = np.empty((rows, n), dtype=np.int8)
    for r in range(rows):
        s = U64(seeds[r])
        for i in range(n):
            out[r, i] = -1 if _draw01(s, U64(i)) < 0.5 else 1
    return out


@njit(cache=True, nogil=True)
def draw01_probe(seed, counter):
    """Expose one jitted draw so tests can pin all three paths together."""
    return _draw01(U64(seed), U64(counter))
