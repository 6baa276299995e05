# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled evaluation kernels (see frdecomp._core_np for the contract)."""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND_NAME = "compiled"

DEF POINT_BLOCK = 1024
# Below this degree the per-point recurrence stays register-resident and the
# point-major loop wins; above it the k-major sweep (points in SIMD-friendly
# blocks) avoids the serial-latency chain per point.
DEF DEGREE_SWITCH = 24


cdef void _clenshaw_point_major(const double* c, Py_ssize_t nc,
                                const double* theta, double* out,
                                Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i, k
    cdef double b1, b2, bn, th
    for i in range(n):
        th = theta[i]
        b1 = 0.0
        b2 = 0.0
        for k in range(nc - 1, 0, -1):
            bn = 2.0 * c[k] + 2.0 * th * b1 - b2
            b2 = b1
            b1 = bn
        out[i] = c[0] + th * b1 - b2


cdef void _clenshaw_k_major(const double* c, Py_ssize_t nc,
                            const double* theta, double* out, Py_ssize_t n,
                            double* b1, double* b2) noexcept nogil:
    """Blocked sweep: recurrence over k with a vectorizable point loop."""
    cdef Py_ssize_t start, i, k, m
    cdef double ck, bn
    for start in range(0, n, POINT_BLOCK):
        m = n - start if n - start < POINT_BLOCK else POINT_BLOCK
        for i in range(m):
            b1[i] = 0.0
            b2[i] = 0.0
        for k in range(nc - 1, 0, -1):
            ck = 2.0 * c[k]
            for i in range(m):
                bn = ck + 2.0 * theta[start + i] * b1[i] - b2[i]
                b2[i] = b1[i]
                b1[i] = bn
        for i in range(m):
            out[start + i] = c[0] + theta[start + i] * b1[i] - b2[i]


cdef void _clenshaw(const double* c, Py_ssize_t nc, const double* theta,
                    double* out, Py_ssize_t n, double* scratch) noexcept nogil:
    if nc <= DEGREE_SWITCH:
        _clenshaw_point_major(c, nc, theta, out, n)
    else:
        _clenshaw_k_major(c, nc, theta, out, n, scratch, scratch + POINT_BLOCK)


def clenshaw_folded(coeffs, theta, out=None):
    """Evaluate c[0] + 2*sum_{k>=1} c[k]*T_k(theta) for an array of theta."""
    cdef cnp.ndarray[double, ndim=1] c = np.ascontiguousarray(coeffs, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] th = np.ascontiguousarray(theta, dtype=np.float64).ravel()
    if out is None:
        out = np.empty_like(th)
    cdef cnp.ndarray[double, ndim=1] o = out
    cdef cnp.ndarray[double, ndim=1] scratch = np.empty(2 * POINT_BLOCK)
    if c.shape[0] == 0:
        raise ValueError("empty coefficient array")
    with nogil:
        _clenshaw(&c[0], c.shape[0], &th[0], &o[0], th.shape[0], &scratch[0])
    return out


def weighted_clenshaw_sum(coeffs_flat, offsets, factors, theta, out=None):
    """Accumulate sum_q factors[q] * series_q(theta); see the numpy twin."""
    cdef cnp.ndarray[double, ndim=1] cf = np.ascontiguousarray(coeffs_flat, dtype=np.float64)
    cdef cnp.ndarray[long long, ndim=1] off = np.ascontiguousarray(offsets, dtype=np.int64)
    cdef cnp.ndarray[double, ndim=1] fac = np.ascontiguousarray(factors, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] th = np.ascontiguousarray(theta, dtype=np.float64).ravel()
    if out is None:
        out = np.zeros_like(th)
    else:
        out[...] = 0.0
    cdef cnp.ndarray[double, ndim=1] o = out
    cdef Py_ssize_t n = th.shape[0]
    cdef cnp.ndarray[double, ndim=1] scratch = np.empty(2 * POINT_BLOCK + n)
    cdef Py_ssize_t nq = fac.shape[0]
    cdef Py_ssize_t q, i, lo, nc
    cdef double f
    cdef double* work = &scratch[0] + 2 * POINT_BLOCK
    with nogil:
        for q in range(nq):
            lo = off[q]
            nc = off[q + 1] - lo
            f = fac[q]
            _clenshaw(&cf[0] + lo, nc, &th[0], work, n, &scratch[0])
            for i in range(n):
                o[i] += f * work[i]
    return out
