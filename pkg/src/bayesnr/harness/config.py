"""JSON experiment configuration.

A config is one JSON object with optional sections ``signal``, ``noise``,
``quantizer``, ``sweep``, ``mc``, ``curve``, ``output`` and a top-level
``mode``. Missing sections take the reference-scenario defaults. Unknown
keys and ill-typed values are rejected with the field path and the line
of the offending key.
"""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field, fields
from typing import Any

import numpy as np

from bayesnr.distributions import (
    GaussianLaw,
    GaussianMixtureLaw,
    LaplaceLaw,
    LaplaceMixtureLaw,
    Law,
    ObservationModel,
)
from bayesnr.errors import ConfigError


class ConfigFieldError(ConfigError):
    """Invalid config value; carries the dotted field path and source line."""

    def __init__(self, path: str, message: str, line: int | None = None):
        self.path = path
        self.line = line
        where = f"{path}" + (f" (line {line})" if line is not None else "")
        super().__init__(f"{where}: {message}")


def _positive(path, v):
    if not (isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v) and v > 0):
        raise ConfigFieldError(path, f"must be a positive number, got {v!r}")
    return float(v)


def _number(path, v):
    if not (isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)):
        raise ConfigFieldError(path, f"must be a finite number, got {v!r}")
    return float(v)


def _integer(path, v, lo):
    if not (isinstance(v, int) and not isinstance(v, bool)) or v < lo:
        raise ConfigFieldError(path, f"must be an integer >= {lo}, got {v!r}")
    return v


def _choice(path, v, options):
    if v not in options:
        raise ConfigFieldError(path, f"must be one of {', '.join(options)}; got {v!r}")
    return v


@dataclass(frozen=True)
class SignalSpec:
    type: str = "laplace"
    sigma_x: float = 1.0

    def validate(self, path):
        _choice(f"{path}.type", self.type, ("laplace", "gaussian"))
        _positive(f"{path}.sigma_x", self.sigma_x)

    def law(self) -> Law:
        return LaplaceLaw(self.sigma_x) if self.type == "laplace" else GaussianLaw(self.sigma_x)


@dataclass(frozen=True)
class NoiseSpec:
    """Noise law. Mixtures take either ``sigma_n`` with ``p0`` and ``R_pow``,
    or explicit per-component ``sigmas`` with ``p0``."""

    type: str = "laplace-mixture"
    sigma_n: float | None = 4.0
    p0: float = 0.9
    R_pow: float | None = 0.001
    sigmas: tuple[float, float] | None = None

    def validate(self, path):
        _choice(f"{path}.type", self.type, ("laplace-mixture", "gaussian-mixture", "laplace", "gaussian"))
        p0 = _number(f"{path}.p0", self.p0)
        if not 0 <= p0 <= 1:
            raise ConfigFieldError(f"{path}.p0", f"must lie in [0, 1], got {p0}")
        if self.sigmas is not None:
            if self.type not in ("laplace-mixture", "gaussian-mixture"):
                raise ConfigFieldError(f"{path}.sigmas", "only mixtures take per-component sigmas")
            if len(self.sigmas) != 2:
                raise ConfigFieldError(f"{path}.sigmas", "need exactly two component sigmas")
            for i, s in enumerate(self.sigmas):
                _positive(f"{path}.sigmas[{i}]", s)
            if self.sigma_n is not None:
                raise ConfigFieldError(f"{path}.sigma_n", "give either sigma_n or sigmas, not both")
            return
        if self.sigma_n is None:
            raise ConfigFieldError(f"{path}.sigma_n", "required unless sigmas is given")
        _positive(f"{path}.sigma_n", self.sigma_n)
        if self.type.endswith("mixture"):
            if self.R_pow is None:
                raise ConfigFieldError(f"{path}.R_pow", "required for a mixture given by sigma_n")
            _positive(f"{path}.R_pow", self.R_pow)

    def total_sigma(self) -> float:
        if self.sigmas is not None:
            return math.sqrt(self.p0 * self.sigmas[0] ** 2 + (1 - self.p0) * self.sigmas[1] ** 2)
        return float(self.sigma_n)

    def law(self, sigma_n: float | None = None) -> Law:
        """The noise law, optionally rescaled to total standard deviation ``sigma_n``."""
        scale = 1.0 if sigma_n is None else sigma_n / self.total_sigma()
        if self.type in ("laplace", "gaussian"):
            s = self.total_sigma() * scale
            return LaplaceLaw(s) if self.type == "laplace" else GaussianLaw(s)
        cls = LaplaceMixtureLaw if self.type == "laplace-mixture" else GaussianMixtureLaw
        if self.sigmas is not None:
            return cls((self.p0, 1 - self.p0), tuple(s * scale for s in self.sigmas))
        base = LaplaceMixtureLaw.from_power_ratio(self.total_sigma() * scale, self.p0, self.R_pow)
        return cls(base.weights, base.sigmas)


@dataclass(frozen=True)
class QuantizerSpec:
    """How partitions are designed for ``curve`` and ``thresholds``.

    ``kind`` is ``uniform`` (thresholds on ``[y1, yN1]``), ``lloyd-max``
    (signal-only Lloyd-Max), ``uniform-overload`` (uniform on ``[-L, L]``
    with overload probability ``p_ol``) or ``sweep`` (uniform with ``L``
    maximizing the Q-MMSE SNR gain over ``L_grid``; empty means the default
    grid).
    """

    kind: str = "uniform"
    N: tuple[int, ...] = (17, 65)
    y1: float = -10.0
    yN1: float = 10.0
    p_ol: float | None = None
    L_grid: tuple[float, ...] = ()
    max_iter: int = 100_000

    def validate(self, path):
        _choice(f"{path}.kind", self.kind, ("uniform", "lloyd-max", "uniform-overload", "sweep"))
        if not self.N:
            raise ConfigFieldError(f"{path}.N", "needs at least one value")
        lo = 3 if self.kind in ("uniform", "uniform-overload", "sweep") else 2
        for i, n in enumerate(self.N):
            _integer(f"{path}.N[{i}]", n, lo)
        if _number(f"{path}.y1", self.y1) >= _number(f"{path}.yN1", self.yN1):
            raise ConfigFieldError(f"{path}.yN1", "must exceed y1")
        if self.kind == "uniform-overload":
            if self.p_ol is None:
                raise ConfigFieldError(f"{path}.p_ol", "required for kind uniform-overload")
            if not 0 < _number(f"{path}.p_ol", self.p_ol) < 1:
                raise ConfigFieldError(f"{path}.p_ol", "must lie in (0, 1)")
        for i, v in enumerate(self.L_grid):
            _positive(f"{path}.L_grid[{i}]", v)
        _integer(f"{path}.max_iter", self.max_iter, 1)


@dataclass(frozen=True)
class SweepSpec:
    """Input-SNR grid; ``optimized_N`` adds a Q-MMSE with optimized overload (null to skip)."""

    input_snr_db_min: float = -15.0
    input_snr_db_max: float = 0.0
    step: float = 1.0
    N: tuple[int, ...] = (17, 65, 127)
    optimized_N: int | None = 127

    def validate(self, path):
        lo = _number(f"{path}.input_snr_db_min", self.input_snr_db_min)
        hi = _number(f"{path}.input_snr_db_max", self.input_snr_db_max)
        _positive(f"{path}.step", self.step)
        if hi < lo:
            raise ConfigFieldError(f"{path}.input_snr_db_max", "must not be below input_snr_db_min")
        for i, n in enumerate(self.N):
            _integer(f"{path}.N[{i}]", n, 3)
        if self.optimized_N is not None:
            _integer(f"{path}.optimized_N", self.optimized_N, 3)

    def grid(self) -> np.ndarray:
        n = int(math.floor((self.input_snr_db_max - self.input_snr_db_min) / self.step + 1e-9)) + 1
        return np.round(self.input_snr_db_min + self.step * np.arange(n), 12)


@dataclass(frozen=True)
class McSpec:
    samples: int = 1_000_000
    seed: int = 0
    replicates: int = 1
    estimators: tuple[str, ...] = ("mmse", "ummse", "identity")

    def validate(self, path):
        _integer(f"{path}.samples", self.samples, 1)
        _integer(f"{path}.seed", self.seed, 0)
        _integer(f"{path}.replicates", self.replicates, 1)
        if not self.estimators:
            raise ConfigFieldError(f"{path}.estimators", "needs at least one estimator")
        for i, e in enumerate(self.estimators):
            _choice(f"{path}.estimators[{i}]", e, ("mmse", "ummse", "identity", "zero"))


@dataclass(frozen=True)
class CurveSpec:
    y_min: float = 0.0
    y_max: float = 12.0
    step: float = 0.05

    def validate(self, path):
        lo = _number(f"{path}.y_min", self.y_min)
        hi = _number(f"{path}.y_max", self.y_max)
        _positive(f"{path}.step", self.step)
        if hi < lo:
            raise ConfigFieldError(f"{path}.y_max", "must not be below y_min")

    def grid(self) -> np.ndarray:
        n = int(math.floor((self.y_max - self.y_min) / self.step + 1e-9)) + 1
        return np.round(self.y_min + self.step * np.arange(n), 12)


@dataclass(frozen=True)
class OutputSpec:
    dir: str = "out"


@dataclass(frozen=True)
class ExperimentConfig:
    signal: SignalSpec = field(default_factory=SignalSpec)
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    quantizer: QuantizerSpec = field(default_factory=QuantizerSpec)
    sweep: SweepSpec = field(default_factory=SweepSpec)
    mc: McSpec = field(default_factory=McSpec)
    curve: CurveSpec = field(default_factory=CurveSpec)
    output: OutputSpec = field(default_factory=OutputSpec)
    mode: str = "closed"

    def validate(self):
        _choice("mode", self.mode, ("closed", "quadrature"))
        for name in ("signal", "noise", "quantizer", "sweep", "mc", "curve"):
            getattr(self, name).validate(name)
        return self

    def model(self, input_snr_db: float | None = None) -> ObservationModel:
        """Observation model; ``input_snr_db`` rescales the noise to that SNR."""
        sigma_n = None
        if input_snr_db is not None:
            sigma_n = self.signal.sigma_x * 10.0 ** (-input_snr_db / 20.0)
        return ObservationModel(self.signal.law(), self.noise.law(sigma_n), mode=self.mode)


_SECTIONS = {
    "signal": SignalSpec,
    "noise": NoiseSpec,
    "quantizer": QuantizerSpec,
    "sweep": SweepSpec,
    "mc": McSpec,
    "curve": CurveSpec,
    "output": OutputSpec,
}
_TUPLE_FIELDS = {"sigmas", "N", "L_grid", "estimators"}


def _line_of(text: str | None, path: list[str]) -> int | None:
    """Best-effort source line of the last key in ``path``."""
    if text is None:
        return None
    pos, found = 0, None
    for key in path:
        idx = text.find(f'"{key}"', pos)
        if idx < 0:
            break
        pos = found = idx
    return None if found is None else text.count("\n", 0, found) + 1


def _section(cls, raw, name, text):
    if not isinstance(raw, dict):
        raise ConfigFieldError(name, "must be a JSON object", _line_of(text, [name]))
    known = {f.name for f in fields(cls)}
    kwargs = {}
    for key, value in raw.items():
        if key not in known:
            raise ConfigFieldError(f"{name}.{key}", "unknown field", _line_of(text, [name, key]))
        if key in _TUPLE_FIELDS and value is not None:
            if isinstance(value, (int, float)) and key == "N":
                value = [value]
            if not isinstance(value, list):
                raise ConfigFieldError(f"{name}.{key}", "must be a list", _line_of(text, [name, key]))
            value = tuple(value)
        kwargs[key] = value
    if cls is NoiseSpec and kwargs.get("sigmas") is not None:
        kwargs.setdefault("sigma_n", None)
    return cls(**kwargs)


def from_dict(raw: Any, text: str | None = None) -> ExperimentConfig:
    """Build and validate a config from parsed JSON."""
    if not isinstance(raw, dict):
        raise ConfigFieldError("<root>", "config must be a JSON object", 1 if text else None)
    kwargs = {}
    for key, value in raw.items():
        if key == "mode":
            kwargs["mode"] = value
        elif key in _SECTIONS:
            kwargs[key] = _section(_SECTIONS[key], value, key, text)
        else:
            raise ConfigFieldError(key, "unknown section", _line_of(text, [key]))
    cfg = ExperimentConfig(**kwargs)
    try:
        return cfg.validate()
    except ConfigFieldError as exc:
        if exc.line is None and text is not None:
            keys = [k.split("[")[0] for k in exc.path.split(".")]
            raise ConfigFieldError(exc.path, str(exc).split(": ", 1)[1], _line_of(text, keys)) from None
        raise


def loads(text: str) -> ExperimentConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigFieldError("<json>", exc.msg, exc.lineno) from None
    return from_dict(raw, text)


def load(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return loads(text)


def to_dict(cfg: ExperimentConfig) -> dict:
    out = dataclasses.asdict(cfg)
    for section in out.values():
        if isinstance(section, dict):
            for k, v in section.items():
                if isinstance(v, tuple):
                    section[k] = list(v)
    return out


def dumps(cfg: ExperimentConfig) -> str:
    return json.dumps(to_dict(cfg), indent=2) + "\n"
