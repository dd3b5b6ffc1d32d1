# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops. Must stay arithmetically identical to ``_fallback``."""

from libc.math cimport exp, isfinite

# rows per cache block in banded_matmul
cdef enum:
    ROW_BLOCK = 512


cdef inline double _dpotential(double x, const double[::1] dpoly,
                               const double[::1] g_amp, const double[::1] g_rate,
                               const double[::1] g_center) noexcept nogil:
    cdef Py_ssize_t k
    cdef double acc = 0.0
    cdef double u
    for k in range(dpoly.shape[0] - 1, -1, -1):
        acc = acc * x + dpoly[k]
    for k in range(g_amp.shape[0]):
        u = x - g_center[k]
        acc = acc + g_amp[k] * (-2.0 * g_rate[k] * u) * exp(-g_rate[k] * u * u)
    return acc


def em_langevin_1d(double[::1] state, const double[::1] noise, double h,
                   double inv_gamma, double noise_scale, const double[::1] dpoly,
                   const double[::1] g_amp, const double[::1] g_rate,
                   const double[::1] g_center, Py_ssize_t stride, double[::1] out):
    """Advance a 1D overdamped Langevin path over ``len(noise)`` steps.

    ``state[0]`` is updated in place; every ``stride`` steps the state is
    written to ``out``. Returns -1, or the index of the first non-finite step.
    """
    cdef double x = state[0]
    cdef double drift
    cdef Py_ssize_t k, j = 0
    cdef Py_ssize_t n = noise.shape[0]
    cdef Py_ssize_t status = -1
    with nogil:
        for k in range(n):
            drift = -inv_gamma * _dpotential(x, dpoly, g_amp, g_rate, g_center)
            x = x + drift * h + noise_scale * noise[k]
            if not isfinite(x):
                status = k
                break
            if (k + 1) % stride == 0:
                out[j] = x
                j += 1
    state[0] = x
    return status


def em_linear(double[::1] state, const double[:, ::1] noise, double h,
              const double[:, ::1] drift, const double[:, ::1] scaled_diffusion,
              Py_ssize_t stride, double[:, ::1] out):
    """Advance an Ornstein-Uhlenbeck path ``dX = A X dt + B dW``.

    ``scaled_diffusion`` is ``sqrt(h) * B``. Same in/out contract as
    ``em_langevin_1d``.
    """
    cdef Py_ssize_t d = state.shape[0]
    cdef Py_ssize_t p = noise.shape[1]
    cdef Py_ssize_t n = noise.shape[0]
    cdef Py_ssize_t k, i, j, row = 0
    cdef Py_ssize_t status = -1
    cdef double acc
    cdef double[::1] x = state
    cdef double[::1] nxt = state.copy()
    with nogil:
        for k in range(n):
            for i in range(d):
                acc = 0.0
                for j in range(d):
                    acc = acc + drift[i, j] * x[j]
                nxt[i] = x[i] + acc * h
                for j in range(p):
                    nxt[i] = nxt[i] + scaled_diffusion[i, j] * noise[k, j]
            for i in range(d):
                x[i] = nxt[i]
                if not isfinite(x[i]):
                    status = k
            if status >= 0:
                break
            if (k + 1) % stride == 0:
                for i in range(d):
                    out[row, i] = x[i]
                row += 1
    return status


def banded_matmul(const long[::1] offsets, const double[::1] values,
                  const double[:, ::1] X):
    """Return ``M @ X`` for ``M[i, i + o] = v`` on every in-range diagonal.

    Rows are processed in cache-sized blocks; within a block diagonals are
    added in order, matching the fallback's summation order bitwise.
    """
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t m = X.shape[1]
    cdef Py_ssize_t nq = offsets.shape[0]
    cdef Py_ssize_t q, k, lo, hi, b0, b1, shift
    cdef Py_ssize_t block = ROW_BLOCK
    cdef double v
    import numpy as np
    out_arr = np.zeros((n, m), dtype=np.float64)
    if n == 0 or m == 0:
        return out_arr
    cdef double[:, ::1] out = out_arr
    cdef double* po = &out[0, 0]
    cdef const double* px = &X[0, 0]
    with nogil:
        b0 = 0
        while b0 < n:
            b1 = b0 + block if b0 + block < n else n
            for q in range(nq):
                # rows i in [lo, hi) of this block with 0 <= i + o < n
                lo = -offsets[q] if -offsets[q] > b0 else b0
                hi = n - offsets[q] if n - offsets[q] < b1 else b1
                if hi <= lo:
                    continue
                v = values[q]
                shift = offsets[q] * m
                for k in range(lo * m, hi * m):
                    po[k] = po[k] + v * px[k + shift]
            b0 = b1
    return out_arr
