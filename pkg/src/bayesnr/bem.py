"""Basis-expansion estimators ``g(y) = sum_i g_i u_i(y)``.

Given the moments ``theta_i = E{x u_i(y)}`` and ``R_ij = E{u_i(y) u_j(y)}``,
the MSE is the quadratic ``sigma_x^2 - 2 g'theta + g'Rg`` and the SNR the
Rayleigh quotient ``g'theta theta'g / g'(sigma_x^2 R - theta theta')g``.
All coefficient designs below are scalings of ``R^-1 theta``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from bayesnr.distributions import ObservationModel
from bayesnr.errors import DegenerateDenominator, DegenerateResidual, DegenerateTheta, NotPositiveDefinite
from bayesnr.estimators import Estimator
from bayesnr.numerics import SymMatrix, integrate, solve_spd, sym_eig


@dataclass(frozen=True)
class BemBasis:
    """Fixed basis functions; each maps an ndarray of ``y`` to an ndarray."""

    functions: tuple[Callable[[np.ndarray], np.ndarray], ...]
    kind: str = "custom"
    partition: object = None
    breakpoints: tuple[float, ...] = ()

    @property
    def size(self) -> int:
        return len(self.functions)

    def evaluate(self, y) -> np.ndarray:
        """Matrix with one row per basis function."""
        y = np.asarray(y, dtype=np.float64)
        return np.array([np.broadcast_to(u(y), y.shape) for u in self.functions], dtype=np.float64)


def rectangular_basis(partition) -> BemBasis:
    """Indicator functions of the cells ``(y_{i-1}, y_i]`` of a partition."""
    edges = partition.edges

    def indicator(lo, hi):
        return lambda y: ((y > lo) & (y <= hi)).astype(np.float64)

    funcs = tuple(indicator(lo, hi) for lo, hi in zip(edges[:-1], edges[1:]))
    return BemBasis(funcs, kind="rectangular", partition=partition, breakpoints=tuple(partition.thresholds))


def polynomial_basis(powers: Sequence[int]) -> BemBasis:
    return BemBasis(tuple((lambda y, k=k: y**k) for k in powers), kind="polynomial")


@dataclass(frozen=True)
class BemSystem:
    theta: np.ndarray
    R: SymMatrix
    sigma_x2: float

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=np.float64).ravel()
        R = self.R if isinstance(self.R, SymMatrix) else SymMatrix(self.R)
        if R.order != theta.size:
            raise ValueError("theta and R sizes differ")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "R", R)

    @property
    def size(self) -> int:
        return self.theta.size

    def rinv_theta(self) -> np.ndarray:
        return solve_spd(self.R, self.theta)

    def explained(self) -> float:
        """theta' R^-1 theta, the output power of the B-MMSE estimator."""
        return float(self.theta @ self.rinv_theta())


@dataclass(frozen=True)
class BemCoefficients:
    g: np.ndarray
    provenance: str

    def estimator(self, basis: BemBasis) -> Estimator:
        g = np.asarray(self.g)
        return Estimator(lambda y: g @ basis.evaluate(y), tag=f"bem:{self.provenance}", breakpoints=basis.breakpoints)


def assemble(model: ObservationModel, basis: BemBasis) -> BemSystem:
    """Moments of ``basis`` under ``model``.

    Rectangular bases use the cell-moment differences of ``D`` and ``F_Y``;
    other bases integrate ``u_i E{x|y} f_Y`` and ``u_i u_j f_Y`` over ``y``.
    """
    if basis.kind == "rectangular" and basis.partition is not None:
        from bayesnr.quantized import cell_moments

        cm = cell_moments(model, basis.partition)
        return BemSystem(cm.theta, np.diag(cm.r), model.sigma_x2)
    pts = sorted(set(model.kinks()) | set(basis.breakpoints))
    n = basis.size
    theta = np.empty(n)
    R = np.empty((n, n))
    inf = math.inf
    for i, ui in enumerate(basis.functions):
        theta[i] = integrate(lambda y: ui(y) * model.numerator(y), -inf, inf, model.quad, pts)
        for j in range(i, n):
            uj = basis.functions[j]
            R[i, j] = R[j, i] = integrate(lambda y: ui(y) * uj(y) * model.pdf(y), -inf, inf, model.quad, pts)
    return BemSystem(theta, R, model.sigma_x2)


def b_mmse(sys: BemSystem) -> BemCoefficients:
    return BemCoefficients(sys.rinv_theta(), "b-mmse")


def _residual(sys: BemSystem) -> tuple[np.ndarray, float]:
    rt = sys.rinv_theta()
    res = sys.sigma_x2 - float(sys.theta @ rt)
    if res <= 1e-14 * sys.sigma_x2:
        raise DegenerateResidual(f"sigma_x^2 - theta'R^-1 theta = {res:.3g}")
    return rt, res


def b_msnr_sherman(sys: BemSystem, c: float) -> BemCoefficients:
    """Max-SNR coefficients ``c (sigma_x^2 R - theta theta')^-1 theta`` through
    the Sherman-Morrison identity, i.e. ``c / (sigma_x^2 - theta'R^-1 theta) R^-1 theta``."""
    if c == 0:
        raise ValueError("c must be nonzero")
    rt, res = _residual(sys)
    return BemCoefficients(c / res * rt, f"b-msnr({c:.6g})")


def b_msnr_eig(sys: BemSystem) -> BemCoefficients:
    """Max-SNR direction from the eigendecomposition of ``sigma_x^2 R - theta theta'``.

    Whitening by ``Lambda^-1/2 U'`` turns the SNR into ``(v'b)^2 / v'v`` with
    ``b = Lambda^-1/2 U' theta``, maximized by ``v = b``. The result is mapped
    back, normalized to unit norm and signed so that ``g'theta > 0``.
    """
    m = sys.sigma_x2 * np.asarray(sys.R) - np.outer(sys.theta, sys.theta)
    w, u = sym_eig(SymMatrix(m))
    if w[-1] <= 1e-12 * abs(float(np.trace(m))):
        raise NotPositiveDefinite(f"sigma_x^2 R - theta theta' has eigenvalue {w[-1]:.3g}")
    inv_sqrt = 1.0 / np.sqrt(w)
    b = inv_sqrt * (u.T @ sys.theta)
    g = u @ (inv_sqrt * b)
    g /= np.linalg.norm(g)
    if g @ sys.theta < 0:
        g = -g
    return BemCoefficients(g, "b-msnr-eig")


def bem_mse(sys: BemSystem, g: BemCoefficients | np.ndarray) -> float:
    g = np.asarray(getattr(g, "g", g), dtype=np.float64)
    return float(sys.sigma_x2 - 2.0 * g @ sys.theta + g @ np.asarray(sys.R) @ g)


def bem_snr(sys: BemSystem, g: BemCoefficients | np.ndarray) -> float:
    g = np.asarray(getattr(g, "g", g), dtype=np.float64)
    proj = float(g @ sys.theta)
    den = sys.sigma_x2 * float(g @ np.asarray(sys.R) @ g) - proj * proj
    if den <= 1e-300:
        raise DegenerateDenominator(f"SNR denominator {den:.3g}")
    return proj * proj / den


def b_msnr_value(sys: BemSystem) -> float:
    """Largest achievable BEM SNR, ``theta'R^-1 theta / (sigma_x^2 - theta'R^-1 theta)``."""
    rt, res = _residual(sys)
    return float(sys.theta @ rt) / res


def b_ummse(sys: BemSystem) -> BemCoefficients:
    """Unit-gain (``g'theta = sigma_x^2``) minimum-MSE coefficients."""
    rt = sys.rinv_theta()
    q = float(sys.theta @ rt)
    if q <= 0:
        raise DegenerateTheta("theta'R^-1 theta is not positive")
    return BemCoefficients(sys.sigma_x2 / q * rt, "b-ummse")


def b_mg(sys: BemSystem, power: float) -> BemCoefficients:
    """Maximum-gain coefficients under the output power constraint ``g'Rg = power``."""
    if not power > 0:
        raise ValueError("power must be positive")
    rt = sys.rinv_theta()
    q = float(sys.theta @ rt)
    if q <= 0:
        raise DegenerateTheta("theta'R^-1 theta is not positive")
    return BemCoefficients(math.sqrt(power / q) * rt, f"b-mg({power:.6g})")
