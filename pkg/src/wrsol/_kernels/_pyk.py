"""NumPy implementations of the hot sparse kernels.

This is the fallback backend used when the compiled extension is not
available, and the reference that the compiled kernels are tested against.
All functions take raw arrays: weight buffers are 1-d float64, sparse
indices are 1-d int64 (sorted, unique), values 1-d float64.
"""

import numpy as np


def dot(w, idx, val):
    """Dense-sparse inner product. Indices at or past len(w) contribute 0."""
    n = w.shape[0]
    if idx.shape[0] == 0 or n == 0:
        return 0.0
    if idx[-1] < n:
        return float(np.dot(w[idx], val))
    keep = idx < n
    if not keep.any():
        return 0.0
    return float(np.dot(w[idx[keep]], val[keep]))


def axpy(w, alpha, idx, val):
    """In-place w[idx] += alpha * val. Caller guarantees idx < len(w)."""
    w[idx] += alpha * val


def fsol_step(theta, w, step, lam_t, idx, val):
    """Sparse dual-accumulator step with soft-threshold re-projection.

    theta[idx] += step * val, then w[idx] is recomputed as
    sign(theta) * max(|theta| - lam_t, 0). Caller guarantees idx < len(theta)
    and len(theta) == len(w).
    """
    theta[idx] += step * val
    t = theta[idx]
    w[idx] = np.sign(t) * np.maximum(np.abs(t) - lam_t, 0.0)


def eval_accuracy_csr(w, indptr, idx, val, labels):
    """Fraction of CSR rows whose margin label * (w . x) is strictly positive."""
    nrows = labels.shape[0]
    if nrows == 0:
        raise ValueError("empty evaluation set")
    wn = w.shape[0]
    nnz = idx.shape[0]
    if nnz == 0 or wn == 0:
        return 0.0
    if idx.max() < wn:
        contrib = w[idx] * val
    else:
        keep = idx < wn
        contrib = np.where(keep, w[np.minimum(idx, wn - 1)] * val, 0.0)
    starts = indptr[:-1]
    scores = np.add.reduceat(contrib, np.minimum(starts, nnz - 1))
    scores[starts == indptr[1:]] = 0.0
    return float(np.mean(labels * scores > 0.0))
