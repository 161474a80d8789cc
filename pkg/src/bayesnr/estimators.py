"""Estimators and their linear-regression performance report.

Any estimator output decomposes as ``g(y) = K x + w`` with ``w`` orthogonal
to ``x``. :func:`report` evaluates the gain ``K``, the output-noise power,
the output SNR ``K^2 sigma_x^2 / sigma_w^2`` and the MSE for a model.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from bayesnr import _kernels
from bayesnr.distributions import DEGENERACY_RTOL, ObservationModel
from bayesnr.errors import DegenerateGain, DivisionNearZero, NearDegenerateRates
from bayesnr.numerics import integrate, rng_uniform

DEGENERATE_RATIO = 1e-12


@dataclass(frozen=True)
class Estimator:
    """A pointwise map ``y -> g(y)`` plus metadata.

    ``breakpoints`` lists the points where ``g`` has kinks or jumps; the
    quadrature in :func:`report` never integrates across them.
    """

    fn: Callable[[np.ndarray], np.ndarray]
    tag: str = "custom"
    breakpoints: tuple[float, ...] = ()
    scale: float = 1.0
    inner: "Estimator | None" = field(default=None, repr=False)

    def __call__(self, y):
        y = np.asarray(y, dtype=np.float64)
        return np.asarray(self.fn(y), dtype=np.float64)

    def scaled(self, a: float) -> "Estimator":
        """``a * g``; the output SNR is unchanged for any ``a != 0``."""
        return Estimator(lambda y: a * self(y), tag="scaled", breakpoints=self.breakpoints, scale=a, inner=self)


@dataclass(frozen=True)
class EstimatorReport:
    gain: float
    output_noise_var: float
    snr: float
    mse: float
    output_power: float
    samples: int | None = None
    stderr_gain: float | None = None
    stderr_mse: float | None = None
    stderr_snr: float | None = None

    @property
    def snr_db(self) -> float:
        return 10.0 * math.log10(self.snr) if self.snr > 0 else -math.inf

    def snr_gain(self, input_snr: float) -> float:
        """Output SNR divided by the input SNR ``sigma_x^2 / sigma_n^2``."""
        return self.snr / input_snr

    def snr_gain_db(self, input_snr: float) -> float:
        g = self.snr_gain(input_snr)
        return 10.0 * math.log10(g) if g > 0 else -math.inf


def snr_from_moments(gain: float, output_power: float, sigma_x2: float) -> tuple[float, float]:
    """(output-noise power, SNR) from K and E{g^2}, with the degenerate conventions.

    ``g == 0`` gives SNR 0; a noiseless output gives ``inf``.
    """
    signal = gain * gain * sigma_x2
    noise = output_power - signal
    if output_power <= 1e-300:
        return 0.0, 0.0
    if noise <= DEGENERATE_RATIO * output_power:
        return max(noise, 0.0), math.inf
    return noise, signal / noise


def _from_moments(cross: float, power: float, sigma_x2: float, **extra) -> EstimatorReport:
    gain = cross / sigma_x2
    noise, snr = snr_from_moments(gain, power, sigma_x2)
    mse = power - 2.0 * cross + sigma_x2
    return EstimatorReport(gain, noise, snr, max(mse, 0.0), power, **extra)


def report(
    model: ObservationModel,
    g: Callable,
    mode: str = "quadrature",
    seed: int = 0,
    samples: int = 10**6,
) -> EstimatorReport:
    """Gain, output-noise power, SNR and MSE of ``g`` under ``model``.

    In ``"quadrature"`` mode the cross moment ``E{x g(y)}`` is computed as
    the integral over ``y`` of ``g(y)`` times ``E{x|y} f_Y(y)`` and the output
    power as the integral of ``g^2 f_Y``. ``"monte-carlo"`` mode averages over
    ``samples`` paired draws and attaches standard errors; the true
    ``sigma_x^2`` is used in both modes.
    """
    sx2 = model.sigma_x2
    if mode == "quadrature":
        pts = sorted(set(model.kinks()) | set(getattr(g, "breakpoints", ())))

        def weighted(weight, power):
            def h(y):
                # Nodes where f_Y underflows carry no mass; skip g there since a
                # ratio estimator is 0/0 at such points.
                w = weight(y)
                keep = model.pdf(y) > 1e-300
                out = np.zeros_like(y)
                out[keep] = np.asarray(g(y[keep]), dtype=np.float64) ** power * w[keep]
                return out
            return h

        cross = integrate(weighted(model.numerator, 1), -math.inf, math.inf, model.quad, pts)
        power = integrate(weighted(model.pdf, 2), -math.inf, math.inf, model.quad, pts)
        return _from_moments(cross, power, sx2)
    if mode != "monte-carlo":
        raise ValueError(f"unknown mode {mode!r}")
    return _monte_carlo(model, g, seed, samples)


def _monte_carlo(model, g, seed, samples):
    if samples < 2:
        raise ValueError("need at least two samples")
    rng = rng_uniform(seed)
    x, y = model.sample(rng, samples)
    gy = np.asarray(g(y), dtype=np.float64)
    sx2 = model.sigma_x2
    xg = x * gy
    g2 = gy * gy
    sq = (gy - x) ** 2
    cross, power = float(np.mean(xg)), float(np.mean(g2))
    rep = _from_moments(cross, power, sx2)
    cov = np.cov(np.vstack([xg, g2])) / samples
    se_gain = math.sqrt(cov[0, 0]) / sx2
    se_mse = float(np.std(sq, ddof=1)) / math.sqrt(samples)
    # Delta method on snr = m1^2 / (sx2 m2 - m1^2), m1 = E{xg}, m2 = E{g^2}.
    den = sx2 * power - cross * cross
    if den > 0:
        grad = np.array([2.0 * cross * sx2 * power, -cross * cross * sx2]) / (den * den)
        se_snr = math.sqrt(max(float(grad @ cov @ grad), 0.0))
    else:
        se_snr = math.inf
    return EstimatorReport(
        rep.gain, rep.output_noise_var, rep.snr, float(np.mean(sq)), rep.output_power,
        samples=samples, stderr_gain=se_gain, stderr_mse=se_mse, stderr_snr=se_snr,
    )


def identity() -> Estimator:
    return Estimator(lambda y: y, tag="identity")


def zero() -> Estimator:
    return Estimator(np.zeros_like, tag="zero")


def mmse_closed(model: ObservationModel) -> Estimator:
    """Closed-form conditional mean for a Laplace signal in Laplace-mixture noise.

    Raises:
        NearDegenerateRates: a noise rate is within 1e-6 (relative) of the
            signal rate, or the model has no closed form; use
            :func:`mmse_numeric` instead.
    """
    if model.rate_gap() < DEGENERACY_RTOL:
        raise NearDegenerateRates("closed-form MMSE needs a Laplace signal with distinct noise rates")
    alpha, p, beta = model.closed_params()

    def fn(y):
        flat = np.ascontiguousarray(np.ravel(y))
        return np.asarray(_kernels.impl.lm_mmse(flat, alpha, p, beta)).reshape(np.shape(y))

    return Estimator(fn, tag="mmse-closed")


def mmse_numeric(model: ObservationModel) -> Estimator:
    """Conditional mean by quadrature: the ratio of the integral of
    ``x f_N(y - x) f_X(x)`` to ``f_Y(y)``."""
    q = model.quadrature()

    def fn(y):
        num = q.numerator(y)
        den = q.pdf(y)
        if np.any(den < 1e-300):
            raise DivisionNearZero("observation density underflows")
        return num / den

    return Estimator(fn, tag="mmse-numeric")


def ummse(g_mmse: Estimator, gain: float) -> Estimator:
    """Unbiased rescaling ``g_mmse / K`` (same SNR, unit gain)."""
    if gain <= DEGENERATE_RATIO:
        raise DegenerateGain(f"gain {gain:.3g} too small to rescale")
    if gain > 1.0 + 1e-9:
        raise ValueError(f"MMSE gain must lie in (0, 1], got {gain}")
    est = g_mmse.scaled(1.0 / gain)
    return Estimator(est.fn, tag="ummse", breakpoints=g_mmse.breakpoints, scale=1.0 / gain, inner=g_mmse)


class MmseIdentities(NamedTuple):
    output_power: float
    mmse: float
    noise_power: float
    msnr: float
    ummse_mse: float


def mmse_identities(gain: float, sigma_x2: float) -> MmseIdentities:
    """MMSE-estimator quantities implied by its gain ``K`` alone."""
    if not 0.0 <= gain <= 1.0:
        raise ValueError(f"gain must lie in [0, 1], got {gain}")
    if sigma_x2 <= 0:
        raise ValueError("sigma_x2 must be positive")
    msnr = math.inf if gain == 1.0 else gain / (1.0 - gain)
    ummse_mse = math.inf if gain == 0.0 else (1.0 - gain) * sigma_x2 / gain
    return MmseIdentities(gain * sigma_x2, (1.0 - gain) * sigma_x2, gain * (1.0 - gain) * sigma_x2, msnr, ummse_mse)


def soft_limiter(beta: float) -> Estimator:
    """Clip to ``[-beta, beta]``."""
    if not beta > 0:
        raise ValueError("beta must be positive")
    return Estimator(lambda y: np.clip(y, -beta, beta), tag="soft-limiter", breakpoints=(-beta, beta))


@dataclass(frozen=True)
class SoftLimiterScan:
    betas: np.ndarray
    mse: np.ndarray
    snr: np.ndarray

    @property
    def beta_mse(self) -> float:
        """Grid point minimizing the MSE (first on ties)."""
        return float(self.betas[int(np.argmin(self.mse))])

    @property
    def beta_snr(self) -> float:
        """Grid point maximizing the SNR (first on ties)."""
        return float(self.betas[int(np.argmax(self.snr))])


def soft_limiter_scan(model: ObservationModel, betas: Sequence[float] | None = None, n: int = 400) -> SoftLimiterScan:
    """Scan clip levels; the default grid is ``n`` points on ``[0.05, 5] * sigma_y``."""
    if betas is None:
        sy = math.sqrt(model.variance)
        betas = np.linspace(0.05 * sy, 5.0 * sy, n)
    betas = np.asarray(betas, dtype=np.float64)
    reps = [report(model, soft_limiter(b)) for b in betas]
    return SoftLimiterScan(betas, np.array([r.mse for r in reps]), np.array([r.snr for r in reps]))
