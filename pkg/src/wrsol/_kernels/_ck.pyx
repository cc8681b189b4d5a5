# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled sparse kernels. Mirrors the NumPy backend in _pyk."""

from libc.math cimport fabs


def dot(const double[::1] w, const long long[::1] idx, const double[::1] val):
    """Dense-sparse inner product. Indices at or past len(w) contribute 0."""
    cdef Py_ssize_t i, n = idx.shape[0], wn = w.shape[0]
    cdef long long j
    cdef double s = 0.0
    for i in range(n):
        j = idx[i]
        if j < wn:
            s += w[j] * val[i]
    return s


def axpy(double[::1] w, double alpha, const long long[::1] idx,
         const double[::1] val):
    """In-place w[idx] += alpha * val. Caller guarantees idx < len(w)."""
    cdef Py_ssize_t i, n = idx.shape[0]
    for i in range(n):
        w[idx[i]] += alpha * val[i]


def fsol_step(double[::1] theta, double[::1] w, double step, double lam_t,
              const long long[::1] idx, const double[::1] val):
    """Sparse dual-accumulator step with soft-threshold re-projection."""
    cdef Py_ssize_t i, n = idx.shape[0]
    cdef long long j
    cdef double t, a
    for i in range(n):
        j = idx[i]
        t = theta[j] + step * val[i]
        theta[j] = t
        a = fabs(t) - lam_t
        if a > 0.0:
            w[j] = a if t > 0.0 else -a
        else:
            w[j] = 0.0


def eval_accuracy_csr(const double[::1] w, const long long[::1] indptr,
                      const long long[::1] idx, const double[::1] val,
                      const double[::1] labels):
    """Fraction of CSR rows whose margin label * (w . x) is strictly positive."""
    cdef Py_ssize_t r, i, nrows = labels.shape[0], wn = w.shape[0]
    cdef long long j
    cdef double s
    cdef Py_ssize_t correct = 0
    if nrows == 0:
        raise ValueError("empty evaluation set")
    for r in range(nrows):
        s = 0.0
        for i in range(indptr[r], indptr[r + 1]):
            j = idx[i]
            if j < wn:
                s += w[j] * val[i]
        if labels[r] * s > 0.0:
            correct += 1
    return correct / <double> nrows
