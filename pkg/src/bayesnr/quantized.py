"""Estimators of quantized observations.

A :class:`Partition` splits the real line into ``N`` cells ``(y_{i-1}, y_i]``
with ``y_0 = -inf`` and ``y_N = +inf``. The Q-MMSE estimator is the
basis-expansion MMSE estimator on the cell indicators; its level in cell
``i`` is ``theta_i / R_ii`` with ``theta_i = D(y_i) - D(y_{i-1})`` and
``R_ii = F_Y(y_i) - F_Y(y_{i-1})``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from bayesnr.distributions import Law, ObservationModel
from bayesnr.errors import NoBracket, NonConvergent
from bayesnr.estimators import Estimator, EstimatorReport, _from_moments, mmse_closed, mmse_numeric
from bayesnr.numerics import find_root

EMPTY_CELL = 1e-14


@dataclass(frozen=True)
class Partition:
    """Strictly increasing finite thresholds ``y_1 < ... < y_{N-1}``."""

    thresholds: tuple[float, ...] = ()

    def __post_init__(self):
        t = tuple(float(v) for v in np.atleast_1d(np.asarray(self.thresholds, dtype=np.float64)))
        if not all(math.isfinite(v) for v in t):
            raise ValueError("thresholds must be finite")
        if any(b <= a for a, b in zip(t, t[1:])):
            raise ValueError("thresholds must be strictly increasing")
        object.__setattr__(self, "thresholds", t)

    @classmethod
    def uniform(cls, n_cells: int, lo: float, hi: float) -> "Partition":
        """``n_cells - 1`` equispaced thresholds from ``lo`` to ``hi`` inclusive."""
        if n_cells < 2:
            raise ValueError("a uniform partition needs at least two cells")
        if n_cells == 2:
            if lo != hi:
                raise ValueError("two cells have a single threshold; need lo == hi")
            return cls((lo,))
        return cls(tuple(np.linspace(lo, hi, n_cells - 1)))

    @classmethod
    def symmetric_uniform(cls, n_cells: int, L: float) -> "Partition":
        return cls.uniform(n_cells, -L, L)

    @property
    def n_cells(self) -> int:
        return len(self.thresholds) + 1

    @property
    def edges(self) -> np.ndarray:
        return np.concatenate([[-np.inf], self.thresholds, [np.inf]])

    def interior_width(self) -> float | None:
        """Mean width of the bounded cells, or None if there are none."""
        if len(self.thresholds) < 2:
            return None
        return (self.thresholds[-1] - self.thresholds[0]) / (len(self.thresholds) - 1)

    def cell_index(self, y) -> np.ndarray:
        """Index ``i`` (0-based) with ``y`` in ``(y_i, y_{i+1}]``."""
        return np.searchsorted(np.asarray(self.thresholds), np.asarray(y, dtype=np.float64), side="left")

    def midpoints(self) -> np.ndarray:
        e = np.asarray(self.thresholds)
        return 0.5 * (e[:-1] + e[1:])


@dataclass(frozen=True)
class CellMoments:
    theta: np.ndarray
    r: np.ndarray
    mode: str
    empty: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if self.empty is None:
            object.__setattr__(self, "empty", self.r < EMPTY_CELL)


@dataclass(frozen=True, eq=False)
class QuantizedEstimator:
    """Piecewise-constant estimator: ``g(y) = levels[i]`` on cell ``i``."""

    partition: Partition
    levels: np.ndarray
    provenance: str = "custom"
    moments: CellMoments | None = field(default=None, repr=False)

    def __post_init__(self):
        lv = np.asarray(self.levels, dtype=np.float64)
        if lv.shape != (self.partition.n_cells,):
            raise ValueError(f"expected {self.partition.n_cells} levels, got {lv.shape}")
        lv.setflags(write=False)
        object.__setattr__(self, "levels", lv)

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return self.partition.thresholds

    @property
    def tag(self) -> str:
        return self.provenance

    def __call__(self, y):
        return self.levels[self.partition.cell_index(y)]

    def to_estimator(self) -> Estimator:
        return Estimator(self.__call__, tag=self.provenance, breakpoints=self.breakpoints)


def d_func(model: ObservationModel, y):
    """D(y) = integral of x f_X(x) F_N(y - x) dx; tends to 0 at both infinities."""
    return model.d_func(y)


def cell_moments(model: ObservationModel, p: Partition) -> CellMoments:
    """Cross moments ``theta_i`` and cell probabilities ``R_ii`` of a partition."""
    t = np.asarray(p.thresholds)
    d = np.concatenate([[0.0], model.d_func(t), [0.0]]) if t.size else np.zeros(2)
    theta = np.diff(d)
    if t.size:
        cdf = np.concatenate([[0.0], model.cdf(t), [1.0]])
        sf = np.concatenate([[1.0], model.sf(t), [0.0]])
    else:
        cdf, sf = np.array([0.0, 1.0]), np.array([1.0, 0.0])
    lo = p.edges[:-1]
    # Upper-tail cells are differenced on the survival function to keep precision.
    r = np.where(lo >= 0, sf[:-1] - sf[1:], cdf[1:] - cdf[:-1])
    return CellMoments(theta, r, model.mode)


def _levels(m: CellMoments) -> np.ndarray:
    safe = np.where(m.empty, 1.0, m.r)
    return np.where(m.empty, 0.0, m.theta / safe)


def q_mmse(model: ObservationModel, p: Partition) -> QuantizedEstimator:
    """MMSE estimator of the quantized observation on partition ``p``; empty cells get level 0."""
    m = cell_moments(model, p)
    return QuantizedEstimator(p, _levels(m), "q-mmse", m)


def q_mmse_mse(moments: CellMoments, sigma_x2: float) -> float:
    """``sigma_x^2 - sum theta_i^2 / R_ii`` over cells with probability mass."""
    keep = ~moments.empty
    return float(sigma_x2 - np.sum(moments.theta[keep] ** 2 / moments.r[keep]))


def quantized_report(moments: CellMoments, levels, sigma_x2: float) -> EstimatorReport:
    """Exact report of any piecewise-constant estimator from its cell moments."""
    lv = np.asarray(levels, dtype=np.float64)
    cross = float(lv @ moments.theta)
    power = float(lv * lv @ moments.r)
    return _from_moments(cross, power, sigma_x2)


def evaluate(model: ObservationModel, est: QuantizedEstimator) -> EstimatorReport:
    m = est.moments if est.moments is not None else cell_moments(model, est.partition)
    return quantized_report(m, est.levels, model.sigma_x2)


def s_mmse_points(p: Partition, outer_width: float | None = None) -> np.ndarray:
    """Sampling points: interior midpoints, and ``y_1 - w/2`` / ``y_{N-1} + w/2`` for
    the outer cells, with ``w`` the mean interior width (``outer_width`` if no
    interior cell exists)."""
    if p.n_cells < 2:
        raise ValueError("sampled MMSE needs at least one finite threshold")
    w = p.interior_width()
    if w is None:
        if outer_width is None:
            raise ValueError("no interior cells; pass outer_width")
        w = outer_width
    t = p.thresholds
    return np.concatenate([[t[0] - 0.5 * w], p.midpoints(), [t[-1] + 0.5 * w]])


def s_mmse(model: ObservationModel, p: Partition, g_mmse: Estimator | None = None) -> QuantizedEstimator:
    """Optimal MMSE curve sampled at one point per cell."""
    if g_mmse is None:
        g_mmse = mmse_closed(model) if model.closed_form else mmse_numeric(model)
    pts = s_mmse_points(p, outer_width=math.sqrt(model.variance))
    return QuantizedEstimator(p, g_mmse(pts), "s-mmse")


def oq_estimator(signal: Law, p: Partition) -> QuantizedEstimator:
    """Signal-only quantizer: levels are the signal centroids of each cell (noise ignored)."""
    e = p.edges
    return QuantizedEstimator(p, signal.centroid(e[:-1], e[1:]), "oq")


def _distortion(signal: Law, edges: np.ndarray, levels: np.ndarray) -> float:
    mass = signal.mass(edges[:-1], edges[1:])
    first = signal.partial_mean(edges[1:]) - signal.partial_mean(edges[:-1])
    return float(signal.variance - 2.0 * levels @ first + (levels * levels) @ mass)


def quantile(law: Law, q: float) -> float:
    if not 0 < q < 1:
        raise ValueError("quantile level must lie in (0, 1)")
    hi = math.sqrt(law.variance)
    while law.cdf(hi) < q:
        hi *= 2.0
    lo = -hi
    while law.cdf(lo) > q:
        lo *= 2.0
    return find_root(lambda v: float(law.cdf(v)) - q, lo, hi, 1e-13)


@dataclass(frozen=True)
class LloydMaxResult:
    partition: Partition
    levels: np.ndarray
    distortion: float
    iterations: int
    history: tuple[float, ...] = field(repr=False, default=())


def lloyd_max(signal: Law, n_levels: int, tol: float = 1e-10, max_iter: int = 10_000) -> LloydMaxResult:
    """Lloyd-Max quantizer of ``signal`` with ``n_levels`` levels.

    Alternates thresholds at midpoints of adjacent levels and levels at the
    cell centroids, from levels at the quantiles ``i/(N+1)``, until the largest
    level change drops below ``tol`` or ``max_iter`` iterations.

    Raises:
        NonConvergent: the cap was hit with a level change above 1e-6.
    """
    if n_levels < 1:
        raise ValueError("need at least one level")
    if n_levels == 1:
        return LloydMaxResult(Partition(()), np.array([signal.mean]), signal.variance, 0, (signal.variance,))
    levels = np.array([quantile(signal, i / (n_levels + 1)) for i in range(1, n_levels + 1)])
    history = []
    change = math.inf
    it = 0
    for it in range(1, max_iter + 1):
        t = 0.5 * (levels[1:] + levels[:-1])
        edges = np.concatenate([[-np.inf], t, [np.inf]])
        new = signal.centroid(edges[:-1], edges[1:])
        change = float(np.max(np.abs(new - levels)))
        levels = new
        history.append(_distortion(signal, edges, levels))
        if change < tol:
            break
    if change > 1e-6:
        raise NonConvergent(f"Lloyd-Max stalled after {max_iter} iterations (level change {change:.3g})")
    t = 0.5 * (levels[1:] + levels[:-1])
    edges = np.concatenate([[-np.inf], t, [np.inf]])
    return LloydMaxResult(Partition(tuple(t)), levels, _distortion(signal, edges, levels), it, tuple(history))


def overload_probability(model: ObservationModel, p: Partition) -> float:
    """P{y <= y_1} + P{y > y_{N-1}}."""
    if not p.thresholds:
        return 0.0
    return float(model.cdf(p.thresholds[0]) + model.sf(p.thresholds[-1]))


def overload_limit(model: ObservationModel, p_ol: float) -> float:
    """L > 0 with P{|y| beyond [-L, L]} = p_ol."""
    if not 0 < p_ol < 1:
        raise NoBracket(f"overload probability {p_ol} is not attainable")

    def f(L):
        return float(model.cdf(-L) + model.sf(L)) - p_ol

    hi = math.sqrt(model.variance)
    limit = 1e6 * hi
    while f(hi) > 0:
        hi *= 2.0
        if hi > limit:
            raise NoBracket(f"overload probability {p_ol} below reach")
    return find_root(f, 0.0, hi, 1e-12)


def uniform_partition_for_overload(model: ObservationModel, n_cells: int, p_ol: float) -> Partition:
    """Equispaced thresholds on ``[-L, L]`` with ``L`` set by the overload probability."""
    if n_cells < 3:
        raise ValueError("need at least three cells")
    L = overload_limit(model, p_ol)
    return Partition.symmetric_uniform(n_cells, L)


@dataclass(frozen=True)
class OverloadSearch:
    partition: Partition
    L: float
    snr_gain: float
    grid: np.ndarray = field(repr=False)
    gains: np.ndarray = field(repr=False)


def default_overload_grid(model: ObservationModel, n: int = 60) -> np.ndarray:
    sy = math.sqrt(model.variance)
    return np.geomspace(0.5 * sy, 10.0 * sy, n)


def optimize_overload(model: ObservationModel, n_cells: int, L_grid: Sequence[float] | None = None) -> OverloadSearch:
    """Uniform Q-MMSE partition ``[-L, L]`` maximizing the SNR gain over ``L_grid``
    (ties go to the smaller ``L``)."""
    grid = default_overload_grid(model) if L_grid is None else np.asarray(L_grid, dtype=np.float64)
    if grid.size == 0:
        raise ValueError("empty L grid")
    grid = np.sort(grid)
    gains = np.empty(grid.size)
    for k, L in enumerate(grid):
        est = q_mmse(model, Partition.symmetric_uniform(n_cells, float(L)))
        gains[k] = evaluate(model, est).snr_gain(model.input_snr)
    best = int(np.argmax(gains))
    L = float(grid[best])
    return OverloadSearch(Partition.symmetric_uniform(n_cells, L), L, float(gains[best]), grid, gains)
