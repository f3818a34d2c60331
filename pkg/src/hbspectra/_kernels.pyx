# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops.  Must stay behaviourally identical to _kernels_py."""

import numpy as np

from libc.math cimport fabs, sqrt


def jacobi_eigenvalues(a_in, double tol=1e-13, int max_sweeps=100):
    """Cyclic Jacobi on a symmetric matrix.

    Returns ``(eigenvalues, sweeps, off_norm)`` with eigenvalues unsorted
    (diagonal order).
    """
    cdef double[:, ::1] a = np.array(a_in, dtype=np.float64, order="C", copy=True)
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t p, q, r
    cdef int sweep = 0
    cdef double off, apq, app, aqq, g, theta, t, c, s, tau, arp, arq
    off = _off_norm(a, n)
    while off >= tol and sweep < max_sweeps:
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                app = a[p, p]
                aqq = a[q, q]
                g = 100.0 * fabs(apq)
                if sweep > 3 and fabs(app) + g == fabs(app) and fabs(aqq) + g == fabs(aqq):
                    a[p, q] = 0.0
                    a[q, p] = 0.0
                    continue
                theta = (aqq - app) / (2.0 * apq)
                if fabs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = 1.0 / (fabs(theta) + sqrt(theta * theta + 1.0))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / sqrt(t * t + 1.0)
                s = t * c
                tau = s / (1.0 + c)
                for r in range(n):
                    if r == p or r == q:
                        continue
                    arp = a[r, p]
                    arq = a[r, q]
                    a[r, p] = arp - s * (arq + tau * arp)
                    a[r, q] = arq + s * (arp - tau * arq)
                    a[p, r] = a[r, p]
                    a[q, r] = a[r, q]
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = 0.0
                a[q, p] = 0.0
        sweep += 1
        off = _off_norm(a, n)
    eig = np.empty(n, dtype=np.float64)
    cdef double[::1] ev = eig
    for p in range(n):
        ev[p] = a[p, p]
    return eig, sweep, off


cdef double _off_norm(double[:, ::1] a, Py_ssize_t n):
    cdef double acc = 0.0
    cdef Py_ssize_t i, j
    for i in range(n):
        for j in range(n):
            if i != j:
                acc += a[i, j] * a[i, j]
    return sqrt(acc)


def heatbath_trajectory(double[::1] label_cum, long[:, ::1] order, double[:, ::1] cum,
                        long[:, ::1] start, long[:, ::1] stop, double[:, ::1] uniforms,
                        long x0):
    """Run a heat-bath chain from ``x0`` consuming two uniforms per step."""
    cdef Py_ssize_t steps = uniforms.shape[0]
    cdef Py_ssize_t n_labels = label_cum.shape[0]
    path_arr = np.empty(steps + 1, dtype=np.int64)
    cdef long[::1] path = path_arr
    cdef Py_ssize_t k, a, i
    cdef long x = x0
    cdef double u
    path[0] = x
    for k in range(steps):
        u = uniforms[k, 0]
        a = 0
        while a < n_labels - 1 and u >= label_cum[a]:
            a += 1
        u = uniforms[k, 1]
        i = start[a, x]
        while i < stop[a, x] - 1 and u >= cum[a, i]:
            i += 1
        x = order[a, i]
        path[k + 1] = x
    return path_arr
