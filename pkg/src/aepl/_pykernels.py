"""NumPy implementations of the hot kernels.

These are the fallback for :mod:`aepl._ckernels`; both expose the same
functions with identical semantics. All inputs are float64 C-contiguous
arrays; callers are responsible for the conversion.
"""

import numpy as np

# Cap on the temporary (rows * k * d) used by the exact pairwise distance;
# larger problems are processed in row chunks.
_CHUNK_BUDGET = 1 << 22


def pairwise_sqdist(x, c):
    """Squared Euclidean distances, shape (m, k).

    Computed from explicit differences (not the expanded dot-product form)
    to avoid catastrophic cancellation for near-coincident points.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    c = np.ascontiguousarray(c, dtype=np.float64)
    m, d = x.shape
    k = c.shape[0]
    out = np.empty((m, k), dtype=np.float64)
    step = max(1, _CHUNK_BUDGET // max(1, k * d))
    for lo in range(0, m, step):
        hi = min(m, lo + step)
        diff = x[lo:hi, None, :] - c[None, :, :]
        out[lo:hi] = np.einsum("ijk,ijk->ij", diff, diff)
    return out


def pairwise_dot(x, c):
    """Plain inner products x @ c.T, shape (m, k)."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    c = np.ascontiguousarray(c, dtype=np.float64)
    return x @ c.T


def sum_by_label(x, labels, k):
    """Per-label row sums and counts, accumulated in index order.

    Returns (sums: (k, d) float64, counts: (k,) int64). The in-order
    accumulation keeps results bit-deterministic and identical to the
    compiled kernel.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    labels = np.ascontiguousarray(labels, dtype=np.int64)
    sums = np.zeros((k, x.shape[1]), dtype=np.float64)
    counts = np.zeros(k, dtype=np.int64)
    np.add.at(sums, labels, x)
    np.add.at(counts, labels, 1)
    return sums, counts
