"""Hot inner-loop kernels with two interchangeable backends.

The compiled (numba) backend is the default when numba imports cleanly; a pure
numpy backend provides the same results. Selection is via the environment
variable DPINV_BACKEND ("numba" or "numpy"), read once at import time.
`benchmarks/kernel_bench.py` times the two against each other.

Both backends must accumulate in the same order so results are bit-identical:
the numpy paths use np.bincount, which adds entries in storage order, matching
the sequential loops here.
"""

import os
import warnings

import numpy as np

_FLAG = os.environ.get("DPINV_BACKEND", "").strip().lower()

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba installed
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


if _FLAG == "numba" and not _HAVE_NUMBA:  # pragma: no cover
    warnings.warn("DPINV_BACKEND=numba requested but numba is unavailable; "
                  "falling back to numpy", RuntimeWarning)

USE_NUMBA = _HAVE_NUMBA and _FLAG != "numpy"


def active_backend() -> str:
    return "numba" if USE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# CSR matrix-vector products.


@njit(cache=True, nogil=True)
def csr_matvec_numba(row_offsets, col_indices, values, x, out):  # pragma: no cover
    for i in range(row_offsets.shape[0] - 1):
        acc = 0.0
        for p in range(row_offsets[i], row_offsets[i + 1]):
            acc += values[p] * x[col_indices[p]]
        out[i] = acc


def csr_matvec_numpy(row_offsets, col_indices, values, entry_rows, x, out):
    out[:] = np.bincount(entry_rows, weights=values * x[col_indices],
                         minlength=out.shape[0])


@njit(cache=True, nogil=True)
def csr_matvec_t_numba(row_offsets, col_indices, values, x, out):  # pragma: no cover
    out[:] = 0.0
    for i in range(row_offsets.shape[0] - 1):
        xi = x[i]
        for p in range(row_offsets[i], row_offsets[i + 1]):
            out[col_indices[p]] += values[p] * xi


def csr_matvec_t_numpy(row_offsets, col_indices, values, entry_rows, x, out):
    out[:] = np.bincount(col_indices, weights=values * x[entry_rows],
                         minlength=out.shape[0])


# ---------------------------------------------------------------------------
# Monte Carlo walk simulation (oracle support).
#
# One trial walks from `start` until it first reaches `target` (first leg,
# counting steps and per-node visits), then keeps walking until it returns to
# `start` (second leg, for round-trip times). Each step consumes one value
# from `randoms`; running out of randoms is the step cap and aborts.


@njit(cache=True, nogil=True)
def mc_walk_numba(cum_rows, start, target, trials, randoms,
                  h_moments, c_moments, visit_sum, visit_sumsq):  # pragma: no cover
    n = cum_rows.shape[0]
    pos = 0
    budget = randoms.shape[0]
    visits = np.zeros(n)
    for _ in range(trials):
        for j in range(n):
            visits[j] = 0.0
        steps1 = 0.0
        state = start
        while state != target:
            visits[state] += 1.0
            if pos >= budget:
                return -1
            r = randoms[pos]
            pos += 1
            state = np.searchsorted(cum_rows[state], r)
            if state >= n:
                state = n - 1
            steps1 += 1.0
        steps2 = 0.0
        while state != start:
            if pos >= budget:
                return -1
            r = randoms[pos]
            pos += 1
            state = np.searchsorted(cum_rows[state], r)
            if state >= n:
                state = n - 1
            steps2 += 1.0
        h_moments[0] += steps1
        h_moments[1] += steps1 * steps1
        rt = steps1 + steps2
        c_moments[0] += rt
        c_moments[1] += rt * rt
        for j in range(n):
            visit_sum[j] += visits[j]
            visit_sumsq[j] += visits[j] * visits[j]
    return pos


def mc_walk_numpy(cum_rows, start, target, trials, randoms,
                  h_moments, c_moments, visit_sum, visit_sumsq):
    """Lockstep-vectorized equivalent of the compiled walk kernel.

    All trials advance together; the random stream is consumed in lockstep
    order rather than per-trial order, so individual samples differ from the
    compiled backend while the estimators share the same distribution.
    """
    n = cum_rows.shape[0]
    pos = 0
    budget = randoms.shape[0]
    state = np.full(trials, start, dtype=np.int64)
    steps1 = np.zeros(trials)
    visits = np.zeros((trials, n))
    alive = state != target
    while alive.any():
        idx = np.nonzero(alive)[0]
        k = idx.shape[0]
        if pos + k > budget:
            return -1
        np.add.at(visits, (idx, state[idx]), 1.0)
        r = randoms[pos:pos + k]
        pos += k
        nxt = np.empty(k, dtype=np.int64)
        for row in np.unique(state[idx]):
            sel = state[idx] == row
            nxt[sel] = np.searchsorted(cum_rows[row], r[sel])
        np.minimum(nxt, n - 1, out=nxt)
        state[idx] = nxt
        steps1[idx] += 1.0
        alive[idx] = nxt != target
    steps2 = np.zeros(trials)
    alive = state != start
    while alive.any():
        idx = np.nonzero(alive)[0]
        k = idx.shape[0]
        if pos + k > budget:
            return -1
        r = randoms[pos:pos + k]
        pos += k
        nxt = np.empty(k, dtype=np.int64)
        for row in np.unique(state[idx]):
            sel = state[idx] == row
            nxt[sel] = np.searchsorted(cum_rows[row], r[sel])
        np.minimum(nxt, n - 1, out=nxt)
        state[idx] = nxt
        steps2[idx] += 1.0
        alive[idx] = nxt != start
    h_moments[0] += steps1.sum()
    h_moments[1] += (steps1 * steps1).sum()
    rt = steps1 + steps2
    c_moments[0] += rt.sum()
    c_moments[1] += (rt * rt).sum()
    visit_sum += visits.sum(axis=0)
    visit_sumsq += (visits * visits).sum(axis=0)
    return pos
