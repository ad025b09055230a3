# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: Hermitian polynomial evaluation and radial roots."""
import numpy as np
cimport numpy as cnp
from libc.math cimport NAN

cnp.import_array()


cdef inline double complex _ipow(double complex x, long e) noexcept nogil:
    cdef double complex r = 1.0
    while e > 0:
        if e & 1:
            r = r * x
        x = x * x
        e >>= 1
    return r


def herm_eval(coef, alpha, beta, z):
    cdef double complex[::1] c = np.ascontiguousarray(coef, dtype=complex)
    cdef long[:, ::1] A = np.ascontiguousarray(alpha, dtype=np.int64)
    cdef long[:, ::1] B = np.ascontiguousarray(beta, dtype=np.int64)
    cdef double complex[:, ::1] Z = np.ascontiguousarray(z, dtype=complex)
    cdef Py_ssize_t N = Z.shape[0], n = Z.shape[1], T = c.shape[0]
    rho_a = np.zeros(N)
    dz_a = np.zeros((N, n), dtype=complex)
    hs_a = np.zeros((N, n, n), dtype=complex)
    cdef double[::1] rho = rho_a
    cdef double complex[:, ::1] dz = dz_a
    cdef double complex[:, :, ::1] hs = hs_a
    cdef Py_ssize_t i, t, j, k, l
    cdef double complex zz[16]
    cdef double complex zc[16]
    cdef double complex pa, pb, pa_j, pb_k, acc
    if n > 16:
        raise ValueError("at most 16 variables")
    with nogil:
        for i in range(N):
            for j in range(n):
                zz[j] = Z[i, j]
                zc[j] = Z[i, j].conjugate()
            acc = 0
            for t in range(T):
                pa = 1.0
                pb = 1.0
                for j in range(n):
                    pa = pa * _ipow(zz[j], A[t, j])
                    pb = pb * _ipow(zc[j], B[t, j])
                acc = acc + c[t] * pa * pb
                for j in range(n):
                    if A[t, j] == 0:
                        continue
                    pa_j = c[t] * A[t, j]
                    for l in range(n):
                        pa_j = pa_j * _ipow(zz[l], A[t, l] - (1 if l == j else 0))
                    dz[i, j] = dz[i, j] + pa_j * pb
                    for k in range(n):
                        if B[t, k] == 0:
                            continue
                        pb_k = B[t, k]
                        for l in range(n):
                            pb_k = pb_k * _ipow(zc[l], B[t, l] - (1 if l == k else 0))
                        hs[i, j, k] = hs[i, j, k] + pa_j * pb_k
            rho[i] = acc.real
    return rho_a, dz_a, hs_a


cdef inline double _peval(double[:, ::1] P, Py_ssize_t i, double t) noexcept nogil:
    cdef Py_ssize_t k
    cdef double acc = 0.0
    for k in range(P.shape[1] - 1, -1, -1):
        acc = acc * t + P[i, k]
    return acc


cdef inline int _sgn(double x) noexcept nogil:
    return (x > 0) - (x < 0)


def radial_roots(pc, double tmax, int nscan, int iters):
    cdef double[:, ::1] P = np.ascontiguousarray(pc, dtype=float)
    cdef Py_ssize_t N = P.shape[0], i
    t_a = np.empty(N)
    ok_a = np.zeros(N, dtype=np.uint8)
    cdef double[::1] tt = t_a
    cdef unsigned char[::1] ok = ok_a
    cdef int s, it
    cdef double f0, a, b, fa, fb, fm, mid, x
    with nogil:
        for i in range(N):
            f0 = _peval(P, i, 0.0)
            a = 0.0
            b = NAN
            for s in range(1, nscan + 1):
                x = tmax * s / nscan
                fb = _peval(P, i, x)
                if fb == 0.0 or _sgn(fb) != _sgn(f0):
                    b = x
                    ok[i] = 1
                    break
                a = x
            if not ok[i]:
                tt[i] = NAN
                continue
            fa = _peval(P, i, a)
            for it in range(iters):
                mid = 0.5 * (a + b)
                fm = _peval(P, i, mid)
                if _sgn(fm) == _sgn(fa):
                    a = mid
                    fa = fm
                else:
                    b = mid
            tt[i] = 0.5 * (a + b)
    return t_a, ok_a.astype(bool)
