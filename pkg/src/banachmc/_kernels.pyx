# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops.  Semantics mirror ``_kernels_py`` exactly."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt, pow, ceil, floor, INFINITY

cnp.import_array()

# Snap radius (in node-spacing units) for points that sit on a grid node.
cdef double SNAP = 64 * 2.220446049250313e-16
cdef Py_ssize_t RESYNC = 1024


cdef inline double _lq_norm(const double* v, Py_ssize_t m, double q) noexcept nogil:
    cdef Py_ssize_t j
    cdef double acc = 0.0, a, scale = 0.0
    if q == INFINITY:
        for j in range(m):
            a = fabs(v[j])
            if a > acc:
                acc = a
        return acc
    if q == 1.0:
        for j in range(m):
            acc += fabs(v[j])
        return acc
    if q == 2.0:
        for j in range(m):
            acc += v[j] * v[j]
        return sqrt(acc)
    for j in range(m):
        a = fabs(v[j])
        if a > scale:
            scale = a
    if scale == 0.0:
        return 0.0
    for j in range(m):
        acc += pow(fabs(v[j]) / scale, q)
    return scale * pow(acc, 1.0 / q)


def sign_norms(double[:, ::1] X, double q):
    """Norms of sum_i eps_i x_i over all sign patterns with eps_1 = +1.

    Patterns are visited in binary-reflected Gray order: pattern ``g``
    (``g = i ^ (i >> 1)``) gives vector ``b + 1`` the sign ``-1`` iff bit
    ``b`` of ``g`` is set.  Returns an array of length ``2**(n-1)``.
    """
    cdef Py_ssize_t n = X.shape[0], m = X.shape[1]
    if n < 1:
        raise ValueError("need at least one vector")
    if n > 31:
        raise ValueError("too many vectors for enumeration")
    cdef Py_ssize_t npat = (<Py_ssize_t>1) << (n - 1)
    out = np.empty(npat, dtype=np.float64)
    cdef double[::1] res = out
    cdef double[::1] s = np.empty(m, dtype=np.float64)
    cdef double[::1] sign = np.ones(n, dtype=np.float64)
    cdef Py_ssize_t i, j, b, g
    with nogil:
        for j in range(m):
            s[j] = 0.0
        for i in range(n):
            for j in range(m):
                s[j] += X[i, j]
        res[0] = _lq_norm(&s[0], m, q)
        for g in range(1, npat):
            b = 0
            while not ((g >> b) & 1):
                b += 1
            sign[b + 1] = -sign[b + 1]
            if g % RESYNC == 0:
                # Recompute from scratch to stop round-off drift.
                for j in range(m):
                    s[j] = 0.0
                for i in range(n):
                    for j in range(m):
                        s[j] += sign[i] * X[i, j]
            else:
                for j in range(m):
                    s[j] += 2.0 * sign[b + 1] * X[b + 1, j]
            res[g] = _lq_norm(&s[0], m, q)
    return out


def local_basis(double[:, ::1] points, int r, int k):
    """Composite tensor Lagrange basis at ``points`` (shape ``(N, d)``).

    Returns ``(idx, w)`` of shape ``(N, (r+1)**d)``: flat global node ids
    (row-major on the ``(r*k+1)**d`` grid) and basis values.  A point on a
    subcube face is assigned to the lower-index subcube.
    """
    cdef Py_ssize_t N = points.shape[0], d = points.shape[1]
    cdef Py_ssize_t nl = r + 1, G = r * k + 1
    cdef Py_ssize_t L = 1, a, p, i, c, rem
    for a in range(d):
        L *= nl
    idx_arr = np.empty((N, L), dtype=np.int64)
    w_arr = np.empty((N, L), dtype=np.float64)
    cdef long long[:, ::1] idx = idx_arr
    cdef double[:, ::1] w = w_arr
    cdef double[::1] bary = np.empty(nl, dtype=np.float64)
    cdef double[:, ::1] lval = np.empty((d, nl), dtype=np.float64)
    cdef long long[::1] base = np.empty(d, dtype=np.int64)
    cdef long long[::1] stride = np.empty(d, dtype=np.int64)
    cdef double y, z, zr, tot, term, wt
    cdef long long cell, gid
    cdef int hit

    # Barycentric weights of the integer nodes 0..r: (-1)^i C(r, i).
    bary[0] = 1.0
    for i in range(1, nl):
        bary[i] = -bary[i - 1] * (r - i + 1) / i
    stride[d - 1] = 1
    for a in range(d - 2, -1, -1):
        stride[a] = stride[a + 1] * G

    with nogil:
        for p in range(N):
            for a in range(d):
                y = points[p, a] * (r * k)
                if y < 0.0:
                    y = 0.0
                elif y > r * k:
                    y = r * k
                zr = floor(y + 0.5)
                if fabs(y - zr) <= SNAP * (1.0 + y):
                    y = zr
                cell = <long long>ceil(y / r) - 1
                if cell < 0:
                    cell = 0
                elif cell > k - 1:
                    cell = k - 1
                base[a] = cell * r
                z = y - cell * r
                hit = -1
                for i in range(nl):
                    if z == i:
                        hit = i
                        break
                if hit >= 0:
                    for i in range(nl):
                        lval[a, i] = 0.0
                    lval[a, hit] = 1.0
                else:
                    tot = 0.0
                    for i in range(nl):
                        term = bary[i] / (z - i)
                        lval[a, i] = term
                        tot += term
                    for i in range(nl):
                        lval[a, i] = lval[a, i] / tot
            for c in range(L):
                rem = c
                gid = 0
                wt = 1.0
                for a in range(d - 1, -1, -1):
                    i = rem % nl
                    rem = rem // nl
                    gid += (base[a] + i) * stride[a]
                    wt *= lval[a, i]
                idx[p, c] = gid
                w[p, c] = wt
    return idx_arr, w_arr
