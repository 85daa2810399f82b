# cython: boundscheck=False, wraparound=False, cdivision=True
"""Fused CSR matrix-vector RK4 stepper for the vectorized master equation.

This is the hot loop of the package: advancing dv/dt = L v where L is the
sparse superoperator and v the row-major flattened density matrix.  A pure
numpy/scipy implementation with identical semantics lives in mlsr._backend;
this module only removes temporary allocations and Python overhead.
"""

import numpy as np


cdef void _spmv(const long long[::1] indptr,
                const long long[::1] indices,
                const double complex[::1] data,
                const double complex[::1] x,
                double complex[::1] out) noexcept nogil:
    cdef Py_ssize_t i, k
    cdef Py_ssize_t n = out.shape[0]
    cdef double complex acc
    for i in range(n):
        acc = 0
        for k in range(indptr[i], indptr[i + 1]):
            acc = acc + data[k] * x[indices[k]]
        out[i] = acc


def rk4_steps(const long long[::1] indptr,
              const long long[::1] indices,
              const double complex[::1] data,
              double complex[::1] y,
              double complex[:, ::1] work,
              double h,
              Py_ssize_t nsteps):
    """Advance y in place by ``nsteps`` classical RK4 steps of size ``h``.

    ``work`` must be a (5, len(y)) complex scratch array.
    """
    cdef double complex[::1] k1 = work[0]
    cdef double complex[::1] k2 = work[1]
    cdef double complex[::1] k3 = work[2]
    cdef double complex[::1] k4 = work[3]
    cdef double complex[::1] tmp = work[4]
    cdef Py_ssize_t step, i
    cdef Py_ssize_t n = y.shape[0]
    cdef double h2 = 0.5 * h
    cdef double h6 = h / 6.0

    if work.shape[0] != 5 or work.shape[1] != n:
        raise ValueError("work array must have shape (5, len(y))")

    with nogil:
        for step in range(nsteps):
            _spmv(indptr, indices, data, y, k1)
            for i in range(n):
                tmp[i] = y[i] + h2 * k1[i]
            _spmv(indptr, indices, data, tmp, k2)
            for i in range(n):
                tmp[i] = y[i] + h2 * k2[i]
            _spmv(indptr, indices, data, tmp, k3)
            for i in range(n):
                tmp[i] = y[i] + h * k3[i]
            _spmv(indptr, indices, data, tmp, k4)
            for i in range(n):
                y[i] = y[i] + h6 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i])
