# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels; same API as ``_pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, expm1, fabs, sqrt

cnp.import_array()

BACKEND = "cython"


def jacobi_eig(a, double tol=1e-15, int max_sweeps=100):
    cdef double[:, ::1] m = np.array(a, dtype=np.float64, order="C", copy=True)
    cdef Py_ssize_t n = m.shape[0]
    vv = np.eye(n)
    cdef double[:, ::1] v = vv
    cdef Py_ssize_t i, j, k, p, q
    cdef double scale = 0.0, off, thresh, apq, theta, t, c, s, x, y
    cdef int sweeps = 0, sw
    for i in range(n):
        for j in range(n):
            scale += m[i, j] * m[i, j]
    scale = sqrt(scale)
    if n < 2 or scale == 0.0:
        return np.array([m[i, i] for i in range(n)]), vv, 0
    thresh = (tol * scale) * (tol * scale)
    for sw in range(1, max_sweeps + 1):
        sweeps = sw
        off = 0.0
        for i in range(n):
            for j in range(n):
                if i != j:
                    off += m[i, j] * m[i, j]
        if off <= thresh:
            sweeps = sw - 1
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = m[p, q]
                if apq == 0.0:
                    continue
                x = m[q, q] - m[p, p]
                if fabs(apq) < 1e-150 * fabs(x):
                    # Small-angle limit; avoids overflow in theta.
                    t = apq / x
                else:
                    theta = x / (2.0 * apq)
                    t = 1.0 / (fabs(theta) + sqrt(theta * theta + 1.0))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    x = m[k, p]
                    y = m[k, q]
                    m[k, p] = c * x - s * y
                    m[k, q] = s * x + c * y
                for k in range(n):
                    x = m[p, k]
                    y = m[q, k]
                    m[p, k] = c * x - s * y
                    m[q, k] = s * x + c * y
                m[p, q] = 0.0
                m[q, p] = 0.0
                for k in range(n):
                    x = v[k, p]
                    y = v[k, q]
                    v[k, p] = c * x - s * y
                    v[k, q] = s * x + c * y
    w = np.empty(n)
    for i in range(n):
        w[i] = m[i, i]
    return w, vv, sweeps


cdef inline double _expdiff(double eb, double ea, double b, double alpha, double s) nogil:
    # eb - ea for eb = c exp(-b s), ea = c exp(-alpha s), without cancellation near s = 0.
    if b < alpha:
        return -eb * expm1((b - alpha) * s)
    return ea * expm1((alpha - b) * s)


cdef inline double _sign(double y) nogil:
    if y > 0.0:
        return 1.0
    if y < 0.0:
        return -1.0
    return 0.0


def lm_pdf(y, double alpha, p, beta):
    cdef double[::1] ys = np.ascontiguousarray(y, dtype=np.float64)
    cdef double[::1] pw = np.ascontiguousarray(p, dtype=np.float64)
    cdef double[::1] bs = np.ascontiguousarray(beta, dtype=np.float64)
    out = np.empty(ys.shape[0])
    cdef double[::1] o = out
    cdef Py_ssize_t i, m, nm = bs.shape[0]
    cdef double s, ea, b, acc
    with nogil:
        for i in range(ys.shape[0]):
            s = fabs(ys[i])
            ea = exp(-alpha * s)
            acc = 0.0
            for m in range(nm):
                b = bs[m]
                acc += pw[m] * alpha * b / (2.0 * (alpha * alpha - b * b)) * (alpha * exp(-b * s) - b * ea)
            o[i] = acc
    return out


def lm_tail(y, double alpha, p, beta):
    cdef double[::1] ys = np.ascontiguousarray(y, dtype=np.float64)
    cdef double[::1] pw = np.ascontiguousarray(p, dtype=np.float64)
    cdef double[::1] bs = np.ascontiguousarray(beta, dtype=np.float64)
    out = np.empty(ys.shape[0])
    cdef double[::1] o = out
    cdef Py_ssize_t i, m, nm = bs.shape[0]
    cdef double s, ea, b, acc, a2 = alpha * alpha
    with nogil:
        for i in range(ys.shape[0]):
            s = fabs(ys[i])
            ea = exp(-alpha * s)
            acc = 0.0
            for m in range(nm):
                b = bs[m]
                acc += pw[m] * (a2 * exp(-b * s) - b * b * ea) / (2.0 * (a2 - b * b))
            o[i] = acc
    return out


def lm_dfunc(y, double alpha, p, beta):
    cdef double[::1] ys = np.ascontiguousarray(y, dtype=np.float64)
    cdef double[::1] pw = np.ascontiguousarray(p, dtype=np.float64)
    cdef double[::1] bs = np.ascontiguousarray(beta, dtype=np.float64)
    out = np.empty(ys.shape[0])
    cdef double[::1] o = out
    cdef Py_ssize_t i, m, nm = bs.shape[0]
    cdef double s, ea, b, b2, d, acc, a2 = alpha * alpha
    with nogil:
        for i in range(ys.shape[0]):
            s = fabs(ys[i])
            ea = exp(-alpha * s)
            acc = 0.0
            for m in range(nm):
                b = bs[m]
                b2 = b * b
                d = a2 - b2
                acc += pw[m] * (b2 * (3.0 * a2 - b2) * ea / (2.0 * alpha * d * d)
                                - a2 * b * exp(-b * s) / (d * d)
                                + b2 * s * ea / (2.0 * d))
            o[i] = acc
    return out


def lm_numerator(y, double alpha, p, beta):
    cdef double[::1] ys = np.ascontiguousarray(y, dtype=np.float64)
    cdef double[::1] pw = np.ascontiguousarray(p, dtype=np.float64)
    cdef double[::1] bs = np.ascontiguousarray(beta, dtype=np.float64)
    out = np.empty(ys.shape[0])
    cdef double[::1] o = out
    cdef Py_ssize_t i, m, nm = bs.shape[0]
    cdef double s, ea, b, d, acc, a2 = alpha * alpha
    with nogil:
        for i in range(ys.shape[0]):
            s = fabs(ys[i])
            ea = exp(-alpha * s)
            acc = 0.0
            for m in range(nm):
                b = bs[m]
                d = a2 - b * b
                acc += pw[m] * (a2 * b * b / (d * d) * _expdiff(exp(-b * s), ea, b, alpha, s)
                                - alpha * b / (2.0 * d) * b * s * ea)
            o[i] = _sign(ys[i]) * acc
    return out


def lm_mmse(y, double alpha, p, beta):
    cdef double[::1] ys = np.ascontiguousarray(y, dtype=np.float64)
    cdef double[::1] pw = np.ascontiguousarray(p, dtype=np.float64)
    cdef double[::1] bs = np.ascontiguousarray(beta, dtype=np.float64)
    out = np.empty(ys.shape[0])
    cdef double[::1] o = out
    cdef Py_ssize_t i, m, nm = bs.shape[0]
    cdef double s, ea, eb, b, d, c2, num, den, a2 = alpha * alpha
    cdef double rmin = alpha
    for m in range(nm):
        if bs[m] < rmin:
            rmin = bs[m]
    with nogil:
        for i in range(ys.shape[0]):
            s = fabs(ys[i])
            ea = exp(-(alpha - rmin) * s)
            num = 0.0
            den = 0.0
            for m in range(nm):
                b = bs[m]
                eb = exp(-(b - rmin) * s)
                d = a2 - b * b
                c2 = alpha * b / (2.0 * d)
                num += pw[m] * (a2 * b * b / (d * d) * _expdiff(eb, ea, b, alpha, s) - c2 * b * s * ea)
                den += pw[m] * c2 * (alpha * eb - b * ea)
            o[i] = _sign(ys[i]) * num / den
    return out
