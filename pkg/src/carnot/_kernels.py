"""Hot numeric kernels with a numba fast path and a pure-numpy fallback.

The numba path is the default.  Setting the environment variable
``CARNOT_NO_NUMBA=1`` (or any nonempty value) before import selects the
numpy implementations instead; both paths produce bit-identical results.
``CARNOT_THREADS`` caps the numba thread pool.  Parallel kernels write one
output row per sample with no shared accumulator, so the thread count never
changes the result.
"""

from __future__ import annotations

import os

import numpy as np

USE_NUMBA = not os.environ.get("CARNOT_NO_NUMBA")

if USE_NUMBA:
    try:
        import numba
        from numba import njit, prange
    except ImportError:  # pragma: no cover
        USE_NUMBA = False

if USE_NUMBA:
    n_threads = os.environ.get("CARNOT_THREADS")
    if n_threads:
        numba.set_num_threads(max(1, min(int(n_threads), numba.config.NUMBA_NUM_THREADS)))


def _bracket_batch_numpy(ks, iis, jjs, vals, a, b):
    out = np.zeros_like(a)
    for k, i, j, c in zip(ks, iis, jjs, vals):
        out[:, k] += c * a[:, i] * b[:, j]
    return out


def _norm_sq_layers_numpy(x, starts, ends):
    n_layers = len(starts)
    out = np.empty((x.shape[0], n_layers))
    for j in range(n_layers):
        out[:, j] = np.einsum("nc,nc->n", x[:, starts[j]:ends[j]], x[:, starts[j]:ends[j]])
    return out


if USE_NUMBA:

    @njit(cache=True, parallel=True)
    def _bracket_batch_numba(ks, iis, jjs, vals, a, b):  # pragma: no cover - compiled
        n, q = a.shape
        out = np.zeros((n, q))
        for s in prange(n):
            for m in range(ks.shape[0]):
                out[s, ks[m]] += vals[m] * a[s, iis[m]] * b[s, jjs[m]]
        return out

    @njit(cache=True, parallel=True)
    def _norm_sq_layers_numba(x, starts, ends):  # pragma: no cover - compiled
        n = x.shape[0]
        n_layers = starts.shape[0]
        out = np.empty((n, n_layers))
        for s in prange(n):
            for j in range(n_layers):
                acc = 0.0
                for c in range(starts[j], ends[j]):
                    acc += x[s, c] * x[s, c]
                out[s, j] = acc
        return out

    bracket_batch_raw = _bracket_batch_numba
    norm_sq_layers_raw = _norm_sq_layers_numba
else:
    bracket_batch_raw = _bracket_batch_numpy
    norm_sq_layers_raw = _norm_sq_layers_numpy


def bracket_batch(sparse, a, b):
    """Rowwise Lie bracket of two (n, q) sample batches.

    ``sparse`` is the (k, i, j, value) arrays of the structure tensor.
    """
    ks, iis, jjs, vals = sparse
    return bracket_batch_raw(ks, iis, jjs, vals, a, b)


def norm_sq_layers(x, starts, ends):
    """Squared Euclidean norm of each layer block, shape (n, n_layers)."""
    return norm_sq_layers_raw(x, starts, ends)
