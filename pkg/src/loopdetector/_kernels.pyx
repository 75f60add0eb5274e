# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: truncated series products and Monte Carlo tallies.

Function signatures and draw-consumption contracts mirror
``loopdetector._kernels_py``; the two backends are interchangeable.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def mul_truncated(const double[:, ::1] a, const double[:, ::1] b):
    """Cauchy product of two coefficient grids, truncated to the input shape."""
    cdef Py_ssize_t nk = a.shape[0], nn = a.shape[1]
    if b.shape[0] != nk or b.shape[1] != nn:
        raise ValueError("series shapes differ")
    out_arr = np.zeros((nk, nn))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t k, n, i, j
    cdef double acc
    with nogil:
        for k in range(nk):
            for n in range(nn):
                acc = 0.0
                for i in range(k + 1):
                    for j in range(n + 1):
                        acc = acc + a[i, j] * b[k - i, n - j]
                out[k, n] = acc
    return out_arr


def bernoulli_pmf(const double[::1] q):
    """Distribution of the number of successes among independent Bernoulli(q_i)."""
    cdef Py_ssize_t nq = q.shape[0]
    out_arr = np.zeros(nq + 1)
    cdef double[::1] p = out_arr
    cdef Py_ssize_t i, k
    cdef double qi
    p[0] = 1.0
    with nogil:
        for i in range(nq):
            qi = q[i]
            for k in range(i + 1, 0, -1):
                p[k] = p[k] * (1.0 - qi) + p[k - 1] * qi
            p[0] = p[0] * (1.0 - qi)
    return out_arr


def tally_coherent(const double[:, ::1] u, const double[::1] q):
    """Tally click counts for coherent-input trials.

    Each trial consumes one row of ``u``: uniform draw ``u[t, i]`` clicks
    window ``i`` iff it is below ``q[i]``.
    """
    cdef Py_ssize_t m = u.shape[0], nw = q.shape[0]
    out_arr = np.zeros(nw + 1, dtype=np.int64)
    cdef cnp.int64_t[::1] out = out_arr
    cdef Py_ssize_t t, i, k
    with nogil:
        for t in range(m):
            k = 0
            for i in range(nw):
                if u[t, i] < q[i]:
                    k += 1
            out[k] += 1
    return out_arr


def tally_fock(const double[:, ::1] u, const double[::1] cum_detect, Py_ssize_t n_photons,
               double p_d):
    """Tally click counts for fixed-photon-number trials.

    Row layout of ``u``: ``n_photons`` fate draws, then (iff the row is wider
    than ``n_photons``) one dark draw per window.  A fate draw lands in the
    first window whose cumulative detection probability exceeds it, and is a
    loss otherwise.
    """
    cdef Py_ssize_t m = u.shape[0], nw = cum_detect.shape[0]
    cdef bint has_dark = u.shape[1] > n_photons
    out_arr = np.zeros(nw + 1, dtype=np.int64)
    cdef cnp.int64_t[::1] out = out_arr
    occ_arr = np.zeros(nw, dtype=np.uint8)
    cdef unsigned char[::1] occ = occ_arr
    cdef Py_ssize_t t, j, w, k
    cdef double x
    with nogil:
        for t in range(m):
            for w in range(nw):
                occ[w] = 0
            for j in range(n_photons):
                x = u[t, j]
                w = 0
                while w < nw and x >= cum_detect[w]:
                    w += 1
                if w < nw:
                    occ[w] = 1
            k = 0
            for w in range(nw):
                if occ[w] or (has_dark and u[t, n_photons + w] < p_d):
                    k += 1
            out[k] += 1
    return out_arr


def tally_distribution(const double[:, ::1] u, const double[::1] cum_photon,
                       const double[::1] cum_detect, double p_d):
    """Tally click counts for trials whose photon number is drawn per trial.

    Row layout of ``u``: one photon-number draw, then ``n_cap`` fate draws of
    which only the first ``n`` are used (the rest are discarded so every trial
    consumes the same budget), then optional dark draws as in ``tally_fock``.
    """
    cdef Py_ssize_t m = u.shape[0], nw = cum_detect.shape[0]
    cdef Py_ssize_t n_cap = cum_photon.shape[0] - 1
    cdef Py_ssize_t dark_off = 1 + n_cap
    cdef bint has_dark = u.shape[1] > dark_off
    out_arr = np.zeros(nw + 1, dtype=np.int64)
    cdef cnp.int64_t[::1] out = out_arr
    occ_arr = np.zeros(nw, dtype=np.uint8)
    cdef unsigned char[::1] occ = occ_arr
    cdef Py_ssize_t t, j, w, k, nt
    cdef double x
    with nogil:
        for t in range(m):
            x = u[t, 0]
            nt = 0
            while nt <= n_cap and x >= cum_photon[nt]:
                nt += 1
            for w in range(nw):
                occ[w] = 0
            for j in range(nt):
                x = u[t, 1 + j]
                w = 0
                while w < nw and x >= cum_detect[w]:
                    w += 1
                if w < nw:
                    occ[w] = 1
            k = 0
            for w in range(nw):
                if occ[w] or (has_dark and u[t, dark_off + w] < p_d):
                    k += 1
            out[k] += 1
    return out_arr
