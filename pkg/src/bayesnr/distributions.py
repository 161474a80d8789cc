"""Scalar probability laws and the additive observation model ``y = x + n``.

All laws are zero-mean and symmetric. Besides ``pdf``/``cdf``/``sample`` each
law exposes its cumulative first moment ``partial_mean(t)``, the integral of
``x f(x)`` over ``(-inf, t]``, which gives exact cell centroids for
quantizer design.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from bayesnr import _kernels
from bayesnr.numerics import DEFAULT_QUAD, QuadratureSpec, integrate

log = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)
DEGENERACY_RTOL = 1e-6


def _arr(x):
    return np.asarray(x, dtype=np.float64)


class Law:
    """Interface shared by all scalar laws."""

    mean = 0.0
    kinks: tuple[float, ...] = ()

    @property
    def variance(self) -> float:
        raise NotImplementedError

    def pdf(self, x):
        raise NotImplementedError

    def cdf(self, x):
        raise NotImplementedError

    def partial_mean(self, t):
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        raise NotImplementedError

    def mass(self, a, b):
        """P{a < X <= b}, accurate in both tails."""
        a, b = _arr(a), _arr(b)
        # Upper-tail differences avoid cancellation when both ends are positive.
        upper = (a >= 0) & (b >= 0)
        lower_part = self.cdf(b) - self.cdf(a)
        upper_part = self.cdf(-a) - self.cdf(-b)
        return np.where(upper, upper_part, lower_part)

    def centroid(self, a, b):
        """E{X | a < X <= b}; 0 for cells without probability mass."""
        m = self.mass(a, b)
        first = self.partial_mean(b) - self.partial_mean(a)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(m > 0, first / np.where(m > 0, m, 1.0), 0.0)


@dataclass(frozen=True)
class LaplaceLaw(Law):
    """Laplace law with standard deviation ``sigma`` (rate ``sqrt(2)/sigma``)."""

    sigma: float
    kinks = (0.0,)

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")

    @property
    def rate(self) -> float:
        return SQRT2 / self.sigma

    @property
    def variance(self) -> float:
        return self.sigma**2

    def pdf(self, x):
        a = self.rate
        return 0.5 * a * np.exp(-a * np.abs(_arr(x)))

    def cdf(self, x):
        x = _arr(x)
        half_tail = 0.5 * np.exp(-self.rate * np.abs(x))
        return np.where(x < 0, half_tail, 1.0 - half_tail)

    def partial_mean(self, t):
        t = _arr(t)
        a = self.rate
        s = np.abs(t)
        with np.errstate(invalid="ignore"):
            val = -0.5 * (s + 1.0 / a) * np.exp(-a * s)
        return np.where(np.isfinite(t), val, 0.0)

    def sample(self, rng, size):
        u = rng.random(size)
        # Inverse cdf on u in [0, 1); 1 - 2|u - 1/2| lies in (0, 1].
        d = u - 0.5
        return -np.sign(d) * np.log1p(-2.0 * np.abs(d)) / self.rate


@dataclass(frozen=True)
class GaussianLaw(Law):
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")

    @property
    def variance(self) -> float:
        return self.sigma**2

    def pdf(self, x):
        z = _arr(x) / self.sigma
        return np.exp(-0.5 * z * z) / (self.sigma * math.sqrt(2 * math.pi))

    def cdf(self, x):
        return special.ndtr(_arr(x) / self.sigma)

    def partial_mean(self, t):
        t = _arr(t)
        val = -self.sigma**2 * self.pdf(np.where(np.isfinite(t), t, 0.0))
        return np.where(np.isfinite(t), val, 0.0)

    def sample(self, rng, size):
        u = rng.random(size)
        # ndtri(0) = -inf; nudge the single excluded endpoint.
        u = np.where(u == 0.0, np.finfo(float).tiny, u)
        return self.sigma * special.ndtri(u)


@dataclass(frozen=True)
class _Mixture(Law):
    weights: tuple[float, ...]
    sigmas: tuple[float, ...]
    components: tuple[Law, ...] = field(init=False, repr=False, compare=False)

    _component = None

    def __post_init__(self):
        w = tuple(float(v) for v in np.atleast_1d(self.weights))
        s = tuple(float(v) for v in np.atleast_1d(self.sigmas))
        if len(w) != len(s) or not w:
            raise ValueError("weights and sigmas must be nonempty and of equal length")
        if any(v < 0 or v > 1 for v in w) or abs(sum(w) - 1.0) > 1e-12:
            raise ValueError(f"weights must lie in [0, 1] and sum to 1, got {w}")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "sigmas", s)
        object.__setattr__(self, "components", tuple(self._component(v) for v in s))

    @property
    def variance(self) -> float:
        return float(sum(p * s * s for p, s in zip(self.weights, self.sigmas)))

    def _sum(self, method, x):
        return sum(p * getattr(c, method)(x) for p, c in zip(self.weights, self.components))

    def pdf(self, x):
        return self._sum("pdf", x)

    def cdf(self, x):
        return self._sum("cdf", x)

    def partial_mean(self, t):
        return self._sum("partial_mean", t)

    def pick(self, rng, size) -> np.ndarray:
        """Component index per draw, chosen by inverse-cdf on the weights."""
        edges = np.cumsum(self.weights)
        edges[-1] = 1.0
        return np.searchsorted(edges, rng.random(size), side="right")

    def sample(self, rng, size):
        idx = self.pick(rng, size)
        out = np.empty(size)
        for m, comp in enumerate(self.components):
            sel = idx == m
            out[sel] = comp.sample(rng, int(sel.sum()))
        return out


class LaplaceMixtureLaw(_Mixture):
    """Weighted sum of zero-mean Laplace laws."""

    _component = LaplaceLaw
    kinks = (0.0,)

    @property
    def rates(self) -> np.ndarray:
        return SQRT2 / np.asarray(self.sigmas)

    @property
    def power_ratio(self) -> float:
        """sigma_{n,0}^2 / sigma_{n,1}^2 for two-component mixtures."""
        if len(self.sigmas) != 2:
            raise ValueError("power ratio is defined for two components")
        return self.sigmas[0] ** 2 / self.sigmas[1] ** 2

    @classmethod
    def from_power_ratio(cls, sigma_n: float, p0: float, r_pow: float) -> "LaplaceMixtureLaw":
        """Two-component mixture with total std ``sigma_n``, weight ``p0`` on
        component 0 and ``sigma_{n,0}^2 / sigma_{n,1}^2 = r_pow``."""
        if not (sigma_n > 0 and r_pow > 0 and 0 <= p0 <= 1):
            raise ValueError("need sigma_n > 0, r_pow > 0, 0 <= p0 <= 1")
        var1 = sigma_n**2 / (p0 * r_pow + (1.0 - p0))
        var0 = r_pow * var1
        return cls((p0, 1.0 - p0), (math.sqrt(var0), math.sqrt(var1)))


class GaussianMixtureLaw(_Mixture):
    _component = GaussianLaw


def as_mixture(law: Law) -> LaplaceMixtureLaw | None:
    """View a Laplace or Laplace-mixture law as a mixture; None otherwise."""
    if isinstance(law, LaplaceMixtureLaw):
        return law
    if isinstance(law, LaplaceLaw):
        return LaplaceMixtureLaw((1.0,), (law.sigma,))
    return None


class ObservationModel:
    """Additive model ``y = x + n`` with independent zero-mean ``x`` and ``n``.

    With a Laplace signal and Laplace(-mixture) noise the observation pdf,
    cdf, ``D(y)`` and the conditional-mean numerator are evaluated in closed
    form; any other pair, or ``mode="quadrature"``, integrates the defining
    convolutions. A closed-form request with a noise rate within ``1e-6``
    (relative) of the signal rate falls back to quadrature and sets
    :attr:`fallback`.
    """

    def __init__(self, signal: Law, noise: Law, mode: str = "closed", quad: QuadratureSpec = DEFAULT_QUAD):
        if mode not in ("closed", "quadrature"):
            raise ValueError(f"unknown mode {mode!r}")
        self.signal = signal
        self.noise = noise
        self.quad = quad
        self.requested_mode = mode
        self.fallback = False
        self._mix = as_mixture(noise) if isinstance(signal, LaplaceLaw) else None
        if mode == "closed" and self._mix is not None:
            gap = self.rate_gap()
            if gap < DEGENERACY_RTOL:
                log.warning("noise rate within %.2g of signal rate; using quadrature", gap)
                self.fallback = True
                self.mode = "quadrature"
            else:
                self.mode = "closed"
        else:
            self.mode = "quadrature"

    def __repr__(self):
        return f"ObservationModel({self.signal!r}, {self.noise!r}, mode={self.mode!r})"

    def rate_gap(self) -> float:
        """min_m |alpha - beta_m| / alpha, or inf if no closed form applies."""
        if self._mix is None:
            return math.inf
        alpha = self.signal.rate
        return float(np.min(np.abs(alpha - self._mix.rates)) / alpha)

    @property
    def closed_form(self) -> bool:
        return self.mode == "closed"

    @property
    def sigma_x2(self) -> float:
        return self.signal.variance

    @property
    def sigma_n2(self) -> float:
        return self.noise.variance

    @property
    def variance(self) -> float:
        return self.sigma_x2 + self.sigma_n2

    @property
    def input_snr(self) -> float:
        return self.sigma_x2 / self.sigma_n2

    def quadrature(self) -> "ObservationModel":
        """Same laws, quadrature evaluation."""
        return ObservationModel(self.signal, self.noise, mode="quadrature", quad=self.quad)

    def closed_params(self):
        """(alpha, weights, rates) for the closed-form kernels."""
        return self.signal.rate, np.asarray(self._mix.weights), self._mix.rates

    def _closed(self, name, y):
        y = _arr(y)
        flat = np.ascontiguousarray(y.ravel())
        out = getattr(_kernels.impl, name)(flat, *self.closed_params())
        return np.asarray(out).reshape(y.shape)

    def _conv(self, y, weight, noise_fn):
        """Elementwise integral of weight(x) f_X(x) noise_fn(y - x) dx.

        Accuracy is relative: tail values of f_Y feed ratios such as E{x|y},
        so an absolute floor would spoil them.
        """
        y = _arr(y)
        out = np.empty(y.shape)
        spec = QuadratureSpec(abs_tol=1e-300, rel_tol=self.quad.rel_tol, max_subdivisions=self.quad.max_subdivisions)
        sig, kinks_n = self.signal, getattr(self.noise, "kinks", ())
        for idx, yv in np.ndenumerate(y):
            yv = float(yv)
            pts = list(sig.kinks) + [yv - k for k in kinks_n]
            out[idx] = integrate(lambda x: weight(x) * sig.pdf(x) * noise_fn(yv - x), -math.inf, math.inf, spec, pts)
        return out

    def pdf(self, y):
        """Observation density f_Y."""
        if self.closed_form:
            return self._closed("lm_pdf", y)
        return self._conv(y, np.ones_like, self.noise.pdf)

    def cdf(self, y):
        """Observation cdf F_Y; the closed form uses odd-symmetry completion for y < 0."""
        if self.closed_form:
            y = _arr(y)
            tail = self._closed("lm_tail", y)
            return np.where(y < 0, tail, 1.0 - tail)
        return self._conv(y, np.ones_like, self.noise.cdf)

    def sf(self, y):
        """Survival function 1 - F_Y, without cancellation in the upper tail."""
        if self.closed_form:
            y = _arr(y)
            tail = self._closed("lm_tail", y)
            return np.where(y < 0, 1.0 - tail, tail)
        # Every law here is symmetric, so 1 - F_Y(y) = F_Y(-y).
        return self._conv(-_arr(y), np.ones_like, self.noise.cdf)

    def d_func(self, y):
        """D(y): the integral of x f_X(x) F_N(y - x) dx (even in y for symmetric laws)."""
        if self.closed_form:
            return self._closed("lm_dfunc", y)
        return self._conv(y, lambda x: x, self.noise.cdf)

    def numerator(self, y):
        """E{x | y} f_Y(y): the integral of x f_X(x) f_N(y - x) dx."""
        if self.closed_form:
            return self._closed("lm_numerator", y)
        return self._conv(y, lambda x: x, self.noise.pdf)

    def sample(self, rng: np.random.Generator, size: int) -> tuple[np.ndarray, np.ndarray]:
        """Paired draws ``(x, y)``; the signal is drawn before the noise."""
        x = self.signal.sample(rng, size)
        n = self.noise.sample(rng, size)
        return x, x + n

    def kinks(self) -> list[float]:
        return sorted(set(self.signal.kinks) | set(getattr(self.noise, "kinks", ())))


def laplace_mixture_model(sigma_x: float, sigma_n: float, p0: float, r_pow: float, mode: str = "closed") -> ObservationModel:
    """Laplace signal in two-component Laplace-mixture noise."""
    return ObservationModel(LaplaceLaw(sigma_x), LaplaceMixtureLaw.from_power_ratio(sigma_n, p0, r_pow), mode=mode)


def reference_model(input_snr_db: float | None = None, mode: str = "closed") -> ObservationModel:
    """The reference scenario: sigma_x = 1, p0 = 0.9, R_pow = 1e-3.

    ``sigma_n`` is 4 unless ``input_snr_db`` is given, in which case it is set
    so that ``sigma_x^2 / sigma_n^2`` equals that SNR.
    """
    sigma_n = 4.0 if input_snr_db is None else 10.0 ** (-input_snr_db / 20.0)
    return laplace_mixture_model(1.0, sigma_n, 0.9, 1e-3, mode=mode)


def pdf(law: Law, x):
    return law.pdf(x)


def cdf(law: Law, x):
    return law.cdf(x)


def sample(law: Law, rng: np.random.Generator, size: int = 1) -> np.ndarray:
    return law.sample(rng, size)


def obs_pdf(model: ObservationModel, y):
    return model.pdf(y)


def obs_cdf(model: ObservationModel, y):
    return model.cdf(y)
