# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled SGD epoch kernels for the factorization models.

Mirrors recaudit.kernels._sgd_py operation for operation; together with
-ffp-contract=off at build time the two backends produce bit-identical
parameters. All updates are in place; callers own shuffling and epoch
bookkeeping so both backends consume identical random streams.
"""

from libc.math cimport sqrt

import numpy as np


def bmf_epoch(const long long[::1] uc, const long long[::1] ic,
              const double[::1] vals, const long long[::1] order,
              double[:, ::1] P, double[:, ::1] Q,
              double[::1] bu, double[::1] bi,
              double mu, double lr, double reg):
    """One SGD pass of biased matrix factorization over ratings in ``order``."""
    cdef Py_ssize_t n = order.shape[0]
    cdef Py_ssize_t f = P.shape[1]
    cdef Py_ssize_t k, t, j
    cdef long long u, i
    cdef double dot, e, puj, qij
    for t in range(n):
        k = <Py_ssize_t> order[t]
        u = uc[k]
        i = ic[k]
        dot = 0.0
        for j in range(f):
            dot += P[u, j] * Q[i, j]
        e = vals[k] - (mu + bu[u] + bi[i] + dot)
        bu[u] += lr * (e - reg * bu[u])
        bi[i] += lr * (e - reg * bi[i])
        for j in range(f):
            puj = P[u, j]
            qij = Q[i, j]
            P[u, j] = puj + lr * (e * qij - reg * puj)
            Q[i, j] = qij + lr * (e * puj - reg * qij)


def svdpp_epoch(const long long[::1] items_by_user, const double[::1] vals_by_user,
                const long long[::1] uptr, const long long[::1] user_order,
                double[:, ::1] P, double[:, ::1] Q, double[:, ::1] Y,
                double[::1] bu, double[::1] bi,
                double mu, double lr, double reg):
    """One SGD pass of SVD++ with the per-user grouped update schedule.

    The implicit-feedback sum is computed once at user entry and the y_j
    vectors receive one accumulated update after the user's ratings, so an
    epoch costs O(f * n_ratings).
    """
    cdef Py_ssize_t n_users = user_order.shape[0]
    cdef Py_ssize_t f = P.shape[1]
    cdef Py_ssize_t w, t, j, start, end
    cdef long long u, i
    cdef double s, dot, e, qij, acc_scale
    impl_arr = np.zeros(f)
    acc_arr = np.zeros(f)
    cdef double[::1] impl = impl_arr
    cdef double[::1] acc = acc_arr

    for w in range(n_users):
        u = user_order[w]
        start = <Py_ssize_t> uptr[u]
        end = <Py_ssize_t> uptr[u + 1]
        if end == start:
            continue
        s = 1.0 / sqrt(<double> (end - start))
        for j in range(f):
            impl[j] = 0.0
            acc[j] = 0.0
        for t in range(start, end):
            i = items_by_user[t]
            for j in range(f):
                impl[j] += Y[i, j]
        for j in range(f):
            impl[j] *= s

        for t in range(start, end):
            i = items_by_user[t]
            dot = 0.0
            for j in range(f):
                dot += Q[i, j] * (P[u, j] + impl[j])
            e = vals_by_user[t] - (mu + bu[u] + bi[i] + dot)
            bu[u] += lr * (e - reg * bu[u])
            bi[i] += lr * (e - reg * bi[i])
            for j in range(f):
                qij = Q[i, j]
                Q[i, j] = qij + lr * (e * (P[u, j] + impl[j]) - reg * qij)
                P[u, j] = P[u, j] + lr * (e * qij - reg * P[u, j])
                acc[j] += e * qij

        for t in range(start, end):
            i = items_by_user[t]
            for j in range(f):
                Y[i, j] += lr * (s * acc[j] - reg * Y[i, j])
