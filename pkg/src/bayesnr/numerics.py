"""Shared numerical kernels.

Adaptive quadrature over possibly unbounded intervals, bracketed root
finding, small symmetric eigenproblems, SPD solves and the seeded uniform
generator used by every Monte-Carlo path.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import linalg, optimize

from bayesnr import _kernels
from bayesnr.errors import IllConditioned, NoBracket, NonConvergent

# Gauss-Kronrod 7/15 abscissae on [-1, 1] (positive half, descending) and weights.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_WK = np.concatenate([_WGK[:-1], _WGK[::-1]])
_WG15 = np.zeros(15)
# Gauss nodes are the odd-indexed Kronrod nodes (1, 3, 5, 7 from each end).
_WG15[[1, 3, 5]] = _WG[:3]
_WG15[[13, 11, 9]] = _WG[:3]
_WG15[7] = _WG[3]

MAX_EIG_ORDER = 512


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances for :func:`integrate`."""

    abs_tol: float = 1e-10
    rel_tol: float = 1e-9
    max_subdivisions: int = 2000

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")


DEFAULT_QUAD = QuadratureSpec()


def _mapped(f, a, b):
    """Return (g, t0, t1) such that the integral of f over (a, b) equals that of g over (t0, t1)."""
    if math.isfinite(a) and math.isfinite(b):
        return f, a, b
    if math.isfinite(a):
        def g(t):
            u = 1.0 - t
            return f(a + t / u) / (u * u)
        return g, 0.0, 1.0
    if math.isfinite(b):
        def g(t):
            u = 1.0 - t
            return f(b - t / u) / (u * u)
        return g, 0.0, 1.0
    raise ValueError("doubly infinite segment must be split first")


def _gk15(g, a, b):
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    fx = np.asarray(g(mid + half * _NODES), dtype=np.float64)
    if fx.shape != (15,):
        fx = np.broadcast_to(fx, (15,))
    if not np.all(np.isfinite(fx)):
        raise ValueError(f"integrand is not finite on ({a}, {b})")
    k = half * float(_WK @ fx)
    gauss = half * float(_WG15 @ fx)
    resabs = abs(half) * float(_WK @ np.abs(fx))
    return k, abs(k - gauss), resabs


def integrate(
    f: Callable[[np.ndarray], np.ndarray],
    lo: float,
    hi: float,
    spec: QuadratureSpec = DEFAULT_QUAD,
    points: Iterable[float] = (),
) -> float:
    """Globally adaptive Gauss-Kronrod (7/15) quadrature.

    ``f`` is called with 1-D float arrays and must return an array of the
    same shape. Infinite endpoints are handled by the change of variable
    ``x = a + t/(1-t)`` on each semi-infinite piece. ``points`` are interior
    breakpoints (kinks, discontinuities) that are never straddled by a panel.

    Raises:
        NonConvergent: subdivision budget exhausted before the error estimate
            met ``max(abs_tol, rel_tol*|I|)``.
    """
    if not lo < hi:
        raise ValueError(f"need lo < hi, got ({lo}, {hi})")
    brk = sorted({float(p) for p in points if lo < p < hi})
    if not brk and math.isinf(lo) and math.isinf(hi):
        brk = [0.0]
    edges = [lo, *brk, hi]

    heap: list[tuple[float, int, float, float, float, float, Callable]] = []
    frozen_val = 0.0
    frozen_err = 0.0
    total = 0.0
    err_total = 0.0
    resabs_total = 0.0
    counter = 0
    for a, b in zip(edges[:-1], edges[1:]):
        g, t0, t1 = _mapped(f, a, b)
        val, err, resabs = _gk15(g, t0, t1)
        heapq.heappush(heap, (-err, counter, t0, t1, val, resabs, g))
        counter += 1
        total += val
        err_total += err
        resabs_total += resabs

    eps = np.finfo(float).eps
    subdivisions = 0
    while True:
        tol = max(spec.abs_tol, spec.rel_tol * abs(total), 50.0 * eps * resabs_total)
        if err_total <= tol:
            break
        if not heap:
            raise NonConvergent("quadrature error floor reached", total, err_total)
        if subdivisions >= spec.max_subdivisions:
            raise NonConvergent(
                f"quadrature did not converge in {spec.max_subdivisions} subdivisions "
                f"(estimate {total:.6g}, error {err_total:.3g})",
                total,
                err_total,
            )
        neg_err, _, a, b, val, resabs, g = heapq.heappop(heap)
        mid = 0.5 * (a + b)
        if not a < mid < b:
            # Panel cannot be split further in floating point.
            frozen_val += val
            frozen_err += -neg_err
            continue
        subdivisions += 1
        v1, e1, r1 = _gk15(g, a, mid)
        v2, e2, r2 = _gk15(g, mid, b)
        total += v1 + v2 - val
        err_total += e1 + e2 + neg_err
        resabs_total += r1 + r2 - resabs
        for lo_, hi_, v, e, r in ((a, mid, v1, e1, r1), (mid, b, v2, e2, r2)):
            heapq.heappush(heap, (-e, counter, lo_, hi_, v, r, g))
            counter += 1
    return math.fsum([item[4] for item in heap] + [frozen_val])


def find_root(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-12) -> float:
    """Root of ``f`` bracketed in ``[lo, hi]`` (Brent's method).

    Raises:
        NoBracket: ``f(lo)`` and ``f(hi)`` have the same strict sign.
    """
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return float(lo)
    if fhi == 0.0:
        return float(hi)
    if flo * fhi > 0:
        raise NoBracket(f"f({lo})={flo:.3g} and f({hi})={fhi:.3g} do not bracket a root")
    return float(optimize.brentq(f, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=500))


@dataclass(frozen=True, eq=False)
class SymMatrix:
    """Exactly symmetric square matrix.

    Inputs asymmetric beyond ``1e-12 * max|entry|`` are rejected; smaller
    asymmetry is averaged away so that ``entries == entries.T`` bitwise.
    """

    entries: np.ndarray

    def __post_init__(self):
        a = np.array(self.entries, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {a.shape}")
        scale = float(np.max(np.abs(a))) if a.size else 0.0
        if np.max(np.abs(a - a.T), initial=0.0) > 1e-12 * max(scale, 1e-300):
            raise ValueError("matrix is not symmetric")
        a = 0.5 * (a + a.T)
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def order(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)


def _as_array(m) -> np.ndarray:
    return m.entries if isinstance(m, SymMatrix) else SymMatrix(m).entries


def sym_eig(m: SymMatrix | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition by cyclic Jacobi rotations.

    Returns:
        (eigenvalues, U) with eigenvalues in descending order and the matching
        orthonormal eigenvectors as the columns of U.
    """
    a = _as_array(m)
    if a.shape[0] > MAX_EIG_ORDER:
        raise ValueError(f"order {a.shape[0]} exceeds limit {MAX_EIG_ORDER}")
    w, v, _ = _kernels.impl.jacobi_eig(a)
    order = np.argsort(-w, kind="stable")
    return w[order], v[:, order]


def solve_spd(m: SymMatrix | np.ndarray, b: Sequence[float] | np.ndarray) -> np.ndarray:
    """Solve ``m v = b`` for symmetric positive definite ``m`` (Cholesky).

    Raises:
        IllConditioned: smallest eigenvalue not above ``1e-12`` times the largest.
    """
    a = _as_array(m)
    w = np.linalg.eigvalsh(a)
    if w[-1] <= 0 or w[0] <= 1e-12 * w[-1]:
        raise IllConditioned(f"matrix not safely positive definite (eigenvalues [{w[0]:.3g}, {w[-1]:.3g}])")
    c = linalg.cho_factor(a, lower=True)
    return linalg.cho_solve(c, np.asarray(b, dtype=np.float64))


def rng_uniform(seed: int) -> np.random.Generator:
    """Seeded generator; ``.random(n)`` yields the uniform stream on [0, 1).

    The bit generator is numpy's PCG64 seeded through ``SeedSequence(seed)``,
    so a given seed reproduces bit-identical draws across runs and platforms.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))


def spawn_streams(seed: int, n: int) -> list[np.random.Generator]:
    """``n`` independent child streams derived deterministically from ``seed``."""
    children = np.random.SeedSequence(int(seed)).spawn(n)
    return [np.random.Generator(np.random.PCG64(c)) for c in children]
