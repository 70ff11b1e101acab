# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled polynomial kernels (see ``_kernels_py`` for the reference versions)."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def poly_from_roots(roots, lead):
    cdef const double complex[:] r = np.ascontiguousarray(roots, dtype=complex)
    cdef Py_ssize_t m = r.shape[0]
    out = np.zeros(m + 1, dtype=complex)
    cdef double complex[:] c = out
    cdef Py_ssize_t k, j
    cdef double complex rk
    c[0] = lead
    for k in range(m):
        rk = r[k]
        # degree k polynomial times (x - rk), updated from the top down
        c[k + 1] = c[k]
        for j in range(k, 0, -1):
            c[j] = c[j - 1] - rk * c[j]
        c[0] = -rk * c[0]
    return out


def horner(coeffs, x):
    cdef const double complex[:] c = np.ascontiguousarray(coeffs, dtype=complex)
    xa = np.asarray(x, dtype=complex)
    flat = np.ascontiguousarray(xa.ravel())
    cdef const double complex[:] xv = flat
    out = np.empty(flat.shape[0], dtype=complex)
    cdef double complex[:] o = out
    cdef Py_ssize_t n = c.shape[0], i, j
    cdef double complex acc, xi
    for i in range(xv.shape[0]):
        xi = xv[i]
        acc = c[n - 1]
        for j in range(n - 2, -1, -1):
            acc = acc * xi + c[j]
        o[i] = acc
    return out.reshape(xa.shape)


def taylor_shift(coeffs, p, int order):
    work_arr = np.array(coeffs, dtype=complex)
    cdef double complex[:] w = work_arr
    cdef Py_ssize_t n = w.shape[0], k, j, start = 0
    out = np.zeros(order + 1, dtype=complex)
    cdef double complex[:] o = out
    cdef double complex acc, pp = p
    for k in range(min(order + 1, n)):
        acc = 0
        for j in range(n - 1, start - 1, -1):
            acc = acc * pp + w[j]
            w[j] = acc
        o[k] = w[start]
        start += 1
    return out


def simple_residues(num, lead, poles):
    cdef const double complex[:] c = np.ascontiguousarray(num, dtype=complex)
    cdef const double complex[:] p = np.ascontiguousarray(poles, dtype=complex)
    cdef Py_ssize_t m = p.shape[0], n = c.shape[0], i, j
    out = np.empty(m, dtype=complex)
    cdef double complex[:] o = out
    cdef double complex acc, den, pi, ld = lead
    for i in range(m):
        pi = p[i]
        acc = c[n - 1]
        for j in range(n - 2, -1, -1):
            acc = acc * pi + c[j]
        den = ld
        for j in range(m):
            if j != i:
                den = den * (pi - p[j])
        o[i] = acc / den
    return out


def product_eval(roots, lead, x):
    cdef const double complex[:] r = np.ascontiguousarray(roots, dtype=complex)
    xa = np.asarray(x, dtype=complex)
    flat = np.ascontiguousarray(xa.ravel())
    cdef const double complex[:] xv = flat
    out = np.empty(flat.shape[0], dtype=complex)
    cdef double complex[:] o = out
    cdef Py_ssize_t i, j
    cdef double complex acc, xi, ld = lead
    for i in range(xv.shape[0]):
        xi = xv[i]
        acc = ld
        for j in range(r.shape[0]):
            acc = acc * (xi - r[j])
        o[i] = acc
    return out.reshape(xa.shape)
