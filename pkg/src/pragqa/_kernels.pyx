# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled enumeration kernels; same contract as ``_kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log2, NAN

cnp.import_array()

BACKEND = "cython"


cdef double _policy_value(double[::1] eu, double alpha) noexcept nogil:
    cdef Py_ssize_t a, n = eu.shape[0]
    cdef double top = eu[0], w, num = 0.0, den = 0.0
    for a in range(1, n):
        if eu[a] > top:
            top = eu[a]
    for a in range(n):
        w = exp(alpha * (eu[a] - top))
        num += w * eu[a]
        den += w
    return num / den


def dp_value(utilities, prior, double alpha):
    cdef double[:, ::1] U = np.ascontiguousarray(utilities, dtype=np.float64)
    cdef double[::1] p = np.ascontiguousarray(prior, dtype=np.float64)
    cdef Py_ssize_t nw = U.shape[0], na = U.shape[1], w, a
    cdef double[::1] eu = np.zeros(na)
    for w in range(nw):
        if p[w] != 0.0:
            for a in range(na):
                eu[a] += p[w] * U[w, a]
    return _policy_value(eu, alpha)


def conditioned_values(utilities, prior, masks, double alpha):
    cdef double[:, ::1] U = np.ascontiguousarray(utilities, dtype=np.float64)
    cdef double[::1] p = np.ascontiguousarray(prior, dtype=np.float64)
    cdef cnp.uint8_t[:, ::1] M = np.ascontiguousarray(masks, dtype=np.uint8)
    cdef Py_ssize_t nk = M.shape[0], nw = U.shape[0], na = U.shape[1]
    cdef Py_ssize_t k, w, a
    values_arr = np.empty(nk)
    kls_arr = np.empty(nk)
    mass_arr = np.empty(nk)
    cdef double[::1] values = values_arr
    cdef double[::1] kls = kls_arr
    cdef double[::1] mass = mass_arr
    cdef double[::1] eu = np.empty(na)
    cdef double m, q, kl
    with nogil:
        for k in range(nk):
            m = 0.0
            for w in range(nw):
                if M[k, w]:
                    m += p[w]
            mass[k] = m
            if m <= 0.0:
                values[k] = NAN
                kls[k] = NAN
                continue
            for a in range(na):
                eu[a] = 0.0
            kl = 0.0
            for w in range(nw):
                if M[k, w] and p[w] > 0.0:
                    q = p[w] / m
                    kl += q * log2(q / p[w])
                    for a in range(na):
                        eu[a] += q * U[w, a]
            values[k] = _policy_value(eu, alpha)
            kls[k] = kl
    return values_arr, kls_arr, mass_arr
