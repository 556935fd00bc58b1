# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-sample update kernels.

Semantics mirror _kernels_py exactly (same update order, same denominator
guards); parity between the two backends is pinned by tests. State arrays
are mutated in place only after every failure-prone denominator has been
validated, so a raised error leaves the state untouched.
"""

import numpy as np

from libc.math cimport isfinite

from .exceptions import NumericalError

ctypedef double complex cplx


cdef inline bint _usable(cplx z) noexcept:
    return isfinite(z.real) and isfinite(z.imag) and z != 0


def jio_step_kernel(cplx[::1] r, cplx d, double lam,
                    cplx[::1] weights, cplx[:, ::1] projection,
                    cplx[:, ::1] P_full, cplx[:, ::1] P_reduced,
                    cplx[:, ::1] P_weights):
    """One joint projection/reduced-filter update. Mutates the state arrays."""
    cdef Py_ssize_t M = r.shape[0]
    cdef Py_ssize_t D = weights.shape[0]
    cdef double inv_lam = 1.0 / lam
    cdef Py_ssize_t i, j
    cdef cplx acc, c, estimate, error, den_red, den_full, den_w

    scratch = np.empty((6, D), dtype=np.complex128)
    cdef cplx[:, ::1] sd = scratch
    cdef cplx[::1] reduced = sd[0]
    cdef cplx[::1] u = sd[1]
    cdef cplx[::1] gain_red = sd[2]
    cdef cplx[::1] weights_new = sd[3]
    cdef cplx[::1] gain_w = sd[4]
    cdef cplx[::1] row_d = sd[5]
    scratch_m = np.empty((3, M), dtype=np.complex128)
    cdef cplx[:, ::1] sm = scratch_m
    cdef cplx[::1] v = sm[0]
    cdef cplx[::1] gain_full = sm[1]
    cdef cplx[::1] row_m = sm[2]

    # Estimate from the pre-update state.
    for j in range(D):
        acc = 0
        for i in range(M):
            acc = acc + projection[i, j].conjugate() * r[i]
        reduced[j] = acc
    acc = 0
    for j in range(D):
        acc = acc + weights[j].conjugate() * reduced[j]
    estimate = acc
    error = d - estimate

    # Reduced gain.
    for i in range(D):
        acc = 0
        for j in range(D):
            acc = acc + P_reduced[i, j] * reduced[j]
        u[i] = acc
    acc = 0
    for j in range(D):
        acc = acc + reduced[j].conjugate() * u[j]
    den_red = 1.0 + inv_lam * acc
    if not _usable(den_red):
        raise NumericalError(f"reduced gain denominator is unusable ({complex(den_red)!r})")
    for j in range(D):
        gain_red[j] = inv_lam * u[j] / den_red
        weights_new[j] = weights[j] + gain_red[j] * error.conjugate()

    # Full-dimension gain.
    for i in range(M):
        acc = 0
        for j in range(M):
            acc = acc + P_full[i, j] * r[j]
        v[i] = acc
    acc = 0
    for j in range(M):
        acc = acc + r[j].conjugate() * v[j]
    den_full = 1.0 + inv_lam * acc
    if not _usable(den_full):
        raise NumericalError(f"projection gain denominator is unusable ({complex(den_full)!r})")
    for i in range(M):
        gain_full[i] = inv_lam * v[i] / den_full

    # Weight gain, using the weights just produced above.
    for i in range(D):
        acc = 0
        for j in range(D):
            acc = acc + P_weights[i, j] * weights_new[j]
        u[i] = acc
    acc = 0
    for j in range(D):
        acc = acc + weights_new[j].conjugate() * u[j]
    den_w = 1.0 + inv_lam * acc
    if not _usable(den_w):
        raise NumericalError(f"weight gain denominator is unusable ({complex(den_w)!r})")
    for j in range(D):
        gain_w[j] = inv_lam * u[j] / den_w

    # All denominators checked; commit. Row products are taken before their
    # matrix is overwritten.
    for j in range(D):
        row_d[j] = 0
    for i in range(D):
        c = reduced[i].conjugate()
        for j in range(D):
            row_d[j] = row_d[j] + c * P_reduced[i, j]
    for i in range(D):
        for j in range(D):
            P_reduced[i, j] = inv_lam * (P_reduced[i, j] - gain_red[i] * row_d[j])
    for j in range(D):
        weights[j] = weights_new[j]

    for j in range(D):
        row_d[j] = 0
    for i in range(D):
        c = weights_new[i].conjugate()
        for j in range(D):
            row_d[j] = row_d[j] + c * P_weights[i, j]
    for i in range(D):
        for j in range(D):
            P_weights[i, j] = inv_lam * (P_weights[i, j] - gain_w[i] * row_d[j])

    c = d.conjugate()
    for j in range(D):
        row_d[j] = c * gain_w[j].conjugate() - reduced[j].conjugate()
    for i in range(M):
        for j in range(D):
            projection[i, j] = projection[i, j] + gain_full[i] * row_d[j]

    for j in range(M):
        row_m[j] = 0
    for i in range(M):
        c = r[i].conjugate()
        for j in range(M):
            row_m[j] = row_m[j] + c * P_full[i, j]
    for i in range(M):
        for j in range(M):
            P_full[i, j] = inv_lam * (P_full[i, j] - gain_full[i] * row_m[j])

    return complex(estimate), complex(error)


def full_rank_step_kernel(cplx[::1] r, cplx d, double lam,
                          cplx[::1] weights, cplx[:, ::1] P):
    """One conventional exponentially weighted RLS update at full dimension."""
    cdef Py_ssize_t M = r.shape[0]
    cdef double inv_lam = 1.0 / lam
    cdef Py_ssize_t i, j
    cdef cplx acc, c, estimate, error, den

    scratch = np.empty((3, M), dtype=np.complex128)
    cdef cplx[:, ::1] sm = scratch
    cdef cplx[::1] v = sm[0]
    cdef cplx[::1] gain = sm[1]
    cdef cplx[::1] row = sm[2]

    acc = 0
    for j in range(M):
        acc = acc + weights[j].conjugate() * r[j]
    estimate = acc
    error = d - estimate

    for i in range(M):
        acc = 0
        for j in range(M):
            acc = acc + P[i, j] * r[j]
        v[i] = acc
    acc = 0
    for j in range(M):
        acc = acc + r[j].conjugate() * v[j]
    den = 1.0 + inv_lam * acc
    if not _usable(den):
        raise NumericalError(f"full-rank gain denominator is unusable ({complex(den)!r})")
    for i in range(M):
        gain[i] = inv_lam * v[i] / den

    for j in range(M):
        weights[j] = weights[j] + gain[j] * error.conjugate()
    for j in range(M):
        row[j] = 0
    for i in range(M):
        c = r[i].conjugate()
        for j in range(M):
            row[j] = row[j] + c * P[i, j]
    for i in range(M):
        for j in range(M):
            P[i, j] = inv_lam * (P[i, j] - gain[i] * row[j])

    return complex(estimate), complex(error)
