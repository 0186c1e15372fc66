"""Compiled inner loops for the dense volume integral operator."""
import os
import threading

import numba
import numpy as np

if "NUMBA_THREADING_LAYER" not in os.environ:
    # the bundled TBB is too old for numba and only produces a warning
    numba.config.THREADING_LAYER = "workqueue"


def _toeplitz_body(index, dims, table, x, out):
    n = index.shape[0]
    D1 = 2 * dims[1] - 1
    D2 = 2 * dims[2] - 1
    o0 = dims[0] - 1
    o1 = dims[1] - 1
    o2 = dims[2] - 1
    for t in numba.prange(n):  # plain range when compiled without parallel
        t0 = index[t, 0] + o0
        t1 = index[t, 1] + o1
        t2 = index[t, 2] + o2
        a0 = 0j
        a1 = 0j
        a2 = 0j
        for s in range(n):
            f = ((t0 - index[s, 0]) * D1 + (t1 - index[s, 1])) * D2 + (t2 - index[s, 2])
            x0 = x[s, 0]
            x1 = x[s, 1]
            x2 = x[s, 2]
            a0 += table[f, 0] * x0 + table[f, 3] * x1 + table[f, 4] * x2
            a1 += table[f, 3] * x0 + table[f, 1] * x1 + table[f, 5] * x2
            a2 += table[f, 4] * x0 + table[f, 5] * x1 + table[f, 2] * x2
        out[t, 0] = a0
        out[t, 1] = a1
        out[t, 2] = a2


_parallel = numba.njit(cache=True, parallel=True)(_toeplitz_body)
# the workqueue layer aborts on concurrent launches, so pool threads get a
# serial build that releases the GIL instead
_serial = numba.njit(nogil=True)(_toeplitz_body)  # uncached: the cache is keyed by function name


def toeplitz_apply(index, dims, table, x, out):
    """``out[t] = sum_s W(index[t] - index[s]) x[s]`` for a symmetric 3x3 lattice kernel.

    ``table`` has shape ``(prod(2*dims-1), 6)`` holding ``xx, yy, zz, xy, xz, yz``
    for each lattice offset.
    """
    if threading.current_thread() is threading.main_thread():
        _parallel(index, dims, table, x, out)
    else:
        _serial(index, dims, table, x, out)


def offset_grid(dims):
    """Integer lattice offsets in ``[-(d-1), d-1]`` per axis, flattened C-order."""
    axes = [np.arange(-(d - 1), d) for d in dims]
    return np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, 3)
