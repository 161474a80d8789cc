"""Self-check suites run by ``bayesnr validate``.

Each suite returns a :class:`SuiteResult`. The closed-form suite compares
the compiled (or fallback) kernels against quadrature of the defining
integrals, so a corrupted kernel constant makes it fail.
"""
from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import asdict, dataclass

import numpy as np

from bayesnr import bem
from bayesnr import estimators as est
from bayesnr import quantized as q
from bayesnr.distributions import LaplaceLaw, reference_model
from bayesnr.numerics import SymMatrix, rng_uniform

log = logging.getLogger(__name__)

RUNTIME_BUDGET_S = 600.0


@dataclass(frozen=True)
class SuiteResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0


@dataclass(frozen=True)
class ValidationReport:
    results: tuple[SuiteResult, ...]
    seconds: float

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def to_json(self) -> str:
        return json.dumps(
            {"passed": self.passed, "seconds": round(self.seconds, 3), "suites": [asdict(r) for r in self.results]},
            indent=2,
        )


def closed_vs_quadrature() -> SuiteResult:
    m = reference_model()
    mq = m.quadrature()
    y = np.linspace(-20.0, 20.0, 81)
    g_gap = float(np.max(np.abs(est.mmse_closed(m)(y) - est.mmse_numeric(m)(y))))
    d_gap = float(np.max(np.abs(m.d_func(y) - mq.d_func(y))))
    f_gap = float(np.max(np.abs(m.cdf(y) - mq.cdf(y))))
    ok = g_gap <= 1e-6 and d_gap <= 1e-8 and f_gap <= 1e-8
    return SuiteResult("closed_vs_quadrature", ok, f"g {g_gap:.2e}, D {d_gap:.2e}, F {f_gap:.2e}")


def random_bem_system(rng: np.random.Generator, n: int) -> bem.BemSystem:
    """Random well-posed system: the joint second moments of ``(x, u_1..u_n)``
    taken from a random full-rank covariance, scaled so that ``sigma_x^2 = 1``."""
    a = rng.standard_normal((n + 1, n + 6))
    joint = a @ a.T / (n + 6)
    joint /= joint[0, 0]
    return bem.BemSystem(joint[1:, 0], SymMatrix(joint[1:, 1:]), 1.0)


def bem_designs(count: int = 50) -> SuiteResult:
    rng = rng_uniform(2024)
    worst_rel = worst_col = worst_snr = 0.0
    for _ in range(count):
        sys = random_bem_system(rng, int(rng.integers(2, 9)))
        g = bem.b_mmse(sys).g
        c_star = sys.sigma_x2 - sys.explained()
        gs = bem.b_msnr_sherman(sys, c_star).g
        worst_rel = max(worst_rel, float(np.linalg.norm(gs - g) / np.linalg.norm(g)))
        ge = bem.b_msnr_eig(sys).g
        worst_col = max(worst_col, 1.0 - abs(float(ge @ g)) / float(np.linalg.norm(g)))
        snrs = [bem.bem_snr(sys, v) for v in (g, gs, bem.b_ummse(sys).g, bem.b_mg(sys, 2.0).g, ge)]
        worst_snr = max(worst_snr, (max(snrs) - min(snrs)) / max(snrs))
    ok = worst_rel <= 1e-10 and worst_col <= 1e-10 and worst_snr <= 1e-9
    return SuiteResult("bem_designs", ok, f"sherman {worst_rel:.2e}, collinearity {worst_col:.2e}, snr {worst_snr:.2e}")


def mmse_identity_suite() -> SuiteResult:
    worst = 0.0
    for db in (-12.0, -6.0, 0.0):
        m = reference_model(db)
        g = est.mmse_closed(m)
        r = est.report(m, g)
        t = est.mmse_identities(r.gain, m.sigma_x2)
        u = est.report(m, est.ummse(g, r.gain))
        pairs = [
            (r.output_power, t.output_power),
            (r.mse, t.mmse),
            (r.output_noise_var, t.noise_power),
            (r.snr, t.msnr),
            (u.mse, t.ummse_mse),
        ]
        worst = max(worst, max(abs(a - b) / abs(b) for a, b in pairs))
    return SuiteResult("mmse_identities", worst <= 1e-6, f"max relative deviation {worst:.2e}")


def cell_moment_sums() -> SuiteResult:
    m = reference_model()
    cm = q.cell_moments(m, q.Partition.symmetric_uniform(65, 10.0))
    st, sr = abs(float(np.sum(cm.theta))), abs(float(np.sum(cm.r)) - 1.0)
    return SuiteResult("cell_moments", st <= 1e-9 and sr <= 1e-9, f"sum theta {st:.2e}, sum R - 1 {sr:.2e}")


def quantized_optimality() -> SuiteResult:
    m = reference_model()
    p = q.Partition.symmetric_uniform(65, 10.0)
    qm = q.q_mmse(m, p)
    j = q.q_mmse_mse(qm.moments, m.sigma_x2)
    others = [q.s_mmse(m, p).levels, q.oq_estimator(m.signal, p).levels]
    rng = rng_uniform(7)
    others += [qm.levels + 0.1 * rng.standard_normal(p.n_cells) for _ in range(100)]
    slack = min(q.quantized_report(qm.moments, lv, m.sigma_x2).mse - j for lv in others)
    sys = bem.assemble(m, bem.rectangular_basis(p))
    gap = float(np.max(np.abs(bem.b_mmse(sys).g - qm.levels)))
    ok = slack >= -1e-12 and gap <= 1e-12
    return SuiteResult("quantized_optimality", ok, f"min excess MSE {slack:.2e}, bem gap {gap:.2e}")


def lloyd_max_small() -> SuiteResult:
    r = q.lloyd_max(LaplaceLaw(1.0), 2)
    gap = max(abs(r.partition.thresholds[0]), float(np.max(np.abs(np.abs(r.levels) - 1 / math.sqrt(2)))))
    return SuiteResult("lloyd_max", gap <= 1e-9, f"N=2 deviation {gap:.2e}")


def mmse_dominance() -> SuiteResult:
    m = reference_model()
    best = est.report(m, est.mmse_closed(m)).snr
    worst = min(best - est.report(m, g).snr for g in (est.identity(), est.soft_limiter(1.0), est.soft_limiter(3.0)))
    return SuiteResult("mmse_dominance", worst >= -1e-6, f"min SNR margin {worst:.3e}")


SUITES = (
    closed_vs_quadrature,
    bem_designs,
    mmse_identity_suite,
    cell_moment_sums,
    quantized_optimality,
    lloyd_max_small,
    mmse_dominance,
)


def run_validate(suites=SUITES) -> ValidationReport:
    """Run every suite; a suite that raises counts as failed."""
    start = time.perf_counter()
    results = []
    for suite in suites:
        t0 = time.perf_counter()
        try:
            res = suite()
        except Exception as exc:  # a crash is a failed check, not an abort
            res = SuiteResult(suite.__name__, False, f"{type(exc).__name__}: {exc}")
        results.append(SuiteResult(res.name, res.passed, res.detail, time.perf_counter() - t0))
    total = time.perf_counter() - start
    if total > RUNTIME_BUDGET_S:
        log.warning("validation took %.0f s, over the %.0f s budget", total, RUNTIME_BUDGET_S)
    return ValidationReport(tuple(results), total)
