"""Pure-Python/numpy kernels.

Reference implementation of the hot kernels. ``_ckernels.pyx`` mirrors every
function here with the same signature; :mod:`bayesnr._kernels` picks one at
import time.

The Laplace-mixture functions take a 1-D float64 array ``y``, the signal rate
``alpha`` and the per-component noise weights ``p`` and rates ``beta``.
Closed forms assume ``alpha != beta[m]`` for every component.
"""
import numpy as np

BACKEND = "python"


def jacobi_eig(a, tol=1e-15, max_sweeps=100):
    """Cyclic (row-by-row) Jacobi eigendecomposition of a symmetric matrix.

    Args:
        a: symmetric (n, n) array; not modified.
        tol: stop when the off-diagonal Frobenius norm drops below
            ``tol * ||a||_F``.
        max_sweeps: hard cap on full sweeps.

    Returns:
        (w, v, sweeps): unsorted eigenvalues, eigenvectors as columns, and the
        number of sweeps performed.
    """
    a = np.array(a, dtype=np.float64, copy=True)
    n = a.shape[0]
    v = np.eye(n)
    scale = np.sqrt(np.sum(a * a))
    if n < 2 or scale == 0.0:
        return np.diag(a).copy(), v, 0
    thresh = (tol * scale) ** 2
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        off = 2.0 * np.sum(np.triu(a, 1) ** 2)
        if off <= thresh:
            sweeps -= 1
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                diff = a[q, q] - a[p, p]
                if abs(apq) < 1e-150 * abs(diff):
                    # Small-angle limit; avoids overflow in theta.
                    t = apq / diff
                else:
                    theta = diff / (2.0 * apq)
                    t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                colp = a[:, p].copy()
                colq = a[:, q]
                a[:, p] = c * colp - s * colq
                a[:, q] = s * colp + c * colq
                rowp = a[p, :].copy()
                rowq = a[q, :]
                a[p, :] = c * rowp - s * rowq
                a[q, :] = s * rowp + c * rowq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q]
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    return np.diag(a).copy(), v, sweeps


def _expdiff(eb, ea, b, alpha, s):
    """eb - ea for eb = c exp(-b s), ea = c exp(-alpha s), without cancellation near s = 0."""
    with np.errstate(over="ignore", invalid="ignore"):
        lo = -eb * np.expm1((b - alpha) * s)
        hi = ea * np.expm1((alpha - b) * s)
    return np.where(b < alpha, lo, hi)


def _terms(y, alpha, beta):
    s = np.abs(np.asarray(y, dtype=np.float64))[:, None]
    b = np.asarray(beta, dtype=np.float64)[None, :]
    return s, b, np.exp(-alpha * s), np.exp(-b * s)


def lm_pdf(y, alpha, p, beta):
    s, b, ea, eb = _terms(y, alpha, beta)
    c2 = alpha * b / (2.0 * (alpha * alpha - b * b))
    return np.sum(p * c2 * (alpha * eb - b * ea), axis=1)


def lm_tail(y, alpha, p, beta):
    """Upper tail 1 - F_Y(|y|)."""
    s, b, ea, eb = _terms(y, alpha, beta)
    a2 = alpha * alpha
    return np.sum(p * (a2 * eb - b * b * ea) / (2.0 * (a2 - b * b)), axis=1)


def lm_dfunc(y, alpha, p, beta):
    """D(|y|); D is even for a symmetric zero-mean model."""
    s, b, ea, eb = _terms(y, alpha, beta)
    a2 = alpha * alpha
    b2 = b * b
    diff = a2 - b2
    t1 = b2 * (3.0 * a2 - b2) * ea / (2.0 * alpha * diff * diff)
    t2 = a2 * b * eb / (diff * diff)
    t3 = b2 * s * ea / (2.0 * diff)
    return np.sum(p * (t1 - t2 + t3), axis=1)


def lm_numerator(y, alpha, p, beta):
    """sgn(y) * integral of x f_N(y - x) f_X(x) dx."""
    y = np.asarray(y, dtype=np.float64)
    s, b, ea, eb = _terms(y, alpha, beta)
    a2 = alpha * alpha
    diff = a2 - b * b
    c1 = a2 * b * b / (diff * diff)
    c2 = alpha * b / (2.0 * diff)
    val = np.sum(p * (c1 * _expdiff(eb, ea, b, alpha, s) - c2 * b * s * ea), axis=1)
    return np.sign(y) * val


def lm_mmse(y, alpha, p, beta):
    """Conditional mean E{x | y}, rescaled by exp(r_min |y|) against underflow."""
    y = np.asarray(y, dtype=np.float64)
    b = np.asarray(beta, dtype=np.float64)[None, :]
    s = np.abs(y)[:, None]
    rmin = min(alpha, float(np.min(beta)))
    ea = np.exp(-(alpha - rmin) * s)
    eb = np.exp(-(b - rmin) * s)
    a2 = alpha * alpha
    diff = a2 - b * b
    c1 = a2 * b * b / (diff * diff)
    c2 = alpha * b / (2.0 * diff)
    num = np.sum(p * (c1 * _expdiff(eb, ea, b, alpha, s) - c2 * b * s * ea), axis=1)
    den = np.sum(p * c2 * (alpha * eb - b * ea), axis=1)
    return np.sign(y) * num / den
