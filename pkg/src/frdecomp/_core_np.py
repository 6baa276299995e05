"""NumPy implementation of the hot evaluation kernels.

This is the fallback backend; frdecomp._corex provides the same functions as
a compiled extension.  Both evaluate folded Chebyshev cosine series

    f(theta) = c[0] + 2 * sum_{k>=1} c[k] * T_k(theta)

by the backward (Clenshaw) recurrence, which is stable for |theta| <= 1 and
the series degrees used here (up to a few thousand).
"""

import numpy as np

BACKEND_NAME = "numpy"


def clenshaw_folded(coeffs, theta, out=None):
    """Evaluate c[0] + 2*sum_{k>=1} c[k]*T_k(theta) for an array of theta."""
    coeffs = np.ascontiguousarray(coeffs, dtype=np.float64)
    theta = np.ascontiguousarray(theta, dtype=np.float64)
    if out is None:
        out = np.empty_like(theta)
    b1 = np.zeros_like(theta)
    b2 = np.zeros_like(theta)
    two_theta = 2.0 * theta
    # Folded series == sum' a_k T_k with a_0 = c_0, a_k = 2 c_k (k >= 1).
    for k in range(coeffs.shape[0] - 1, 0, -1):
        b1, b2 = 2.0 * coeffs[k] + two_theta * b1 - b2, b1
    np.multiply(theta, b1, out=out)
    out -= b2
    out += coeffs[0]
    return out


def weighted_clenshaw_sum(coeffs_flat, offsets, factors, theta, out=None):
    """Accumulate sum_q factors[q] * series_q(theta).

    series_q has coefficients coeffs_flat[offsets[q]:offsets[q+1]] in the
    folded convention of :func:`clenshaw_folded`.  This is the inner loop of
    the scale integrals (quadrature over t of t^2 W_t(lambda) dt/t).
    """
    coeffs_flat = np.ascontiguousarray(coeffs_flat, dtype=np.float64)
    offsets = np.ascontiguousarray(offsets, dtype=np.int64)
    factors = np.ascontiguousarray(factors, dtype=np.float64)
    theta = np.ascontiguousarray(theta, dtype=np.float64)
    if out is None:
        out = np.zeros_like(theta)
    else:
        out[...] = 0.0
    scratch = np.empty_like(theta)
    for q in range(factors.shape[0]):
        c = coeffs_flat[offsets[q]:offsets[q + 1]]
        clenshaw_folded(c, theta, out=scratch)
        out += factors[q] * scratch
    return out
