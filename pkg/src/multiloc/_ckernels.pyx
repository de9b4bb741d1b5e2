# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled configuration-space kernels (see ``_pykernels`` for the reference)."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()


cdef inline uint64_t _mix(uint64_t z) nogil:
    z = z + <uint64_t>0x9E3779B97F4A7C15ULL
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t _zigzag(int64_t c) nogil:
    return <uint64_t>((c << 1) ^ (c >> 63))


def site_uniforms(seed, k, coords):
    cdef const int64_t[:, ::1] c = np.ascontiguousarray(coords, dtype=np.int64)
    cdef Py_ssize_t m = c.shape[0], d = c.shape[1], i, j
    cdef uint64_t h0, h
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] o = out
    h0 = _mix(<uint64_t>int(seed))
    h0 = _mix(h0 ^ <uint64_t>int(k))
    h0 = _mix(h0 ^ <uint64_t>d)
    with nogil:
        for i in range(m):
            h = h0
            for j in range(d):
                h = _mix(h ^ _zigzag(c[i, j]))
            o[i] = (<double>(h >> 11) + 0.5) * 1.1102230246251565e-16
    return out


def hausdorff_matrix(a, b):
    cdef const int64_t[:, :, ::1] A = np.ascontiguousarray(a, dtype=np.int64)
    cdef const int64_t[:, :, ::1] B = np.ascontiguousarray(b, dtype=np.int64)
    cdef Py_ssize_t N = A.shape[0], n = A.shape[1], d = A.shape[2]
    cdef Py_ssize_t M = B.shape[0], m = B.shape[1]
    cdef Py_ssize_t i, j, p, q, l
    cdef int64_t dd, t, best, h2
    out = np.empty((N, M), dtype=np.float64)
    cdef double[:, ::1] o = out
    with nogil:
        for i in range(N):
            for j in range(M):
                h2 = 0
                for p in range(n):
                    best = -1
                    for q in range(m):
                        dd = 0
                        for l in range(d):
                            t = A[i, p, l] - B[j, q, l]
                            dd = dd + t * t
                        if best < 0 or dd < best:
                            best = dd
                    if best > h2:
                        h2 = best
                for q in range(m):
                    best = -1
                    for p in range(n):
                        dd = 0
                        for l in range(d):
                            t = A[i, p, l] - B[j, q, l]
                            dd = dd + t * t
                        if best < 0 or dd < best:
                            best = dd
                    if best > h2:
                        h2 = best
                o[i, j] = sqrt(<double>h2)
    return out


def splitting_widths(a):
    cdef const int64_t[:, :, ::1] A = np.ascontiguousarray(a, dtype=np.int64)
    cdef Py_ssize_t N = A.shape[0], n = A.shape[1], d = A.shape[2]
    cdef Py_ssize_t i, j, step, l, arg
    cdef int64_t t, dd, cmin, worst
    out = np.zeros(N, dtype=np.float64)
    if n < 2:
        return out
    cdef double[::1] o = out
    best_arr = np.empty(n, dtype=np.int64)
    tree_arr = np.empty(n, dtype=np.uint8)
    cdef int64_t[::1] best = best_arr
    cdef unsigned char[::1] tree = tree_arr
    with nogil:
        for i in range(N):
            for j in range(n):
                tree[j] = 0
                dd = 0
                for l in range(d):
                    t = A[i, 0, l] - A[i, j, l]
                    dd = dd + t * t
                best[j] = dd
            tree[0] = 1
            worst = 0
            for step in range(n - 1):
                arg = -1
                cmin = 0
                for j in range(n):
                    if tree[j] == 0 and (arg < 0 or best[j] < cmin):
                        arg = j
                        cmin = best[j]
                if cmin > worst:
                    worst = cmin
                tree[arg] = 1
                for j in range(n):
                    if tree[j] == 0:
                        dd = 0
                        for l in range(d):
                            t = A[i, arg, l] - A[i, j, l]
                            dd = dd + t * t
                        if dd < best[j]:
                            best[j] = dd
            o[i] = sqrt(<double>worst)
    return out
