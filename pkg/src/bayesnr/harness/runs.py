"""Experiment drivers that write CSV files.

Every driver is deterministic for a given config: rows are produced in a
fixed order (parallel work is reduced in submission order) and numbers are
printed with 12 significant digits and LF line endings.
"""
from __future__ import annotations

import csv
import functools
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from bayesnr import estimators as est
from bayesnr import quantized as q
from bayesnr.distributions import Law, ObservationModel
from bayesnr.errors import ConfigError
from bayesnr.harness.config import ExperimentConfig

THREADS_ENV = "BAYESNR_THREADS"


def thread_count() -> int:
    """Worker count: ``BAYESNR_THREADS`` if set, else the CPU count."""
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw == "":
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return n


def _parallel_map(fn, items):
    items = list(items)
    n = min(thread_count(), len(items))
    if n <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.12g}"


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_csv(out_dir, name: str, header, rows) -> Path:
    path = Path(out_dir) / name
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(csv_text(header, rows))
    return path


def mmse_estimator(model: ObservationModel) -> est.Estimator:
    return est.mmse_closed(model) if model.closed_form else est.mmse_numeric(model)


@functools.lru_cache(maxsize=64)
def _lloyd_max_cached(signal: Law, n: int, max_iter: int) -> q.LloydMaxResult:
    return q.lloyd_max(signal, n, max_iter=max_iter)


def design_partition(cfg: ExperimentConfig, model: ObservationModel, n: int) -> q.Partition:
    """Partition with ``n`` cells per the config's quantizer kind."""
    spec = cfg.quantizer
    if spec.kind == "uniform":
        return q.Partition.uniform(n, spec.y1, spec.yN1)
    if spec.kind == "lloyd-max":
        return _lloyd_max_cached(model.signal, n, spec.max_iter).partition
    if spec.kind == "uniform-overload":
        return q.uniform_partition_for_overload(model, n, spec.p_ol)
    grid = spec.L_grid or None
    return q.optimize_overload(model, n, grid).partition


def run_curve(cfg: ExperimentConfig, out_dir=None) -> Path:
    """``curve.csv``: the MMSE curve and Q-MMSE / S-MMSE staircases on the y-grid."""
    model = cfg.model()
    y = cfg.curve.grid()
    g = mmse_estimator(model)
    header = ["y", "g_mmse"]
    cols = [g(y)]
    parts = [(n, design_partition(cfg, model, n)) for n in cfg.quantizer.N]
    for n, p in parts:
        header.append(f"g_qmmse_N{n}")
        cols.append(q.q_mmse(model, p)(y))
    for n, p in parts:
        header.append(f"g_smmse_N{n}")
        cols.append(q.s_mmse(model, p, g)(y))
    rows = zip(y, *cols)
    return write_csv(out_dir or cfg.output.dir, "curve.csv", header, rows)


SWEEP_KINDS = ("qmmse_u", "qmmse_nu", "smmse_u", "smmse_nu", "oq_u", "oq_nu")


def sweep_header(cfg: ExperimentConfig) -> list[str]:
    header = ["input_snr_db", "gain_db_mmse", "mse_mmse"]
    for n in cfg.sweep.N:
        header.append(f"pol_N{n}")
        for k in SWEEP_KINDS:
            header += [f"gain_db_{k}_N{n}", f"mse_{k}_N{n}"]
    if cfg.sweep.optimized_N is not None:
        header += [f"gain_db_qmmse_opt_N{cfg.sweep.optimized_N}", f"mse_qmmse_opt_N{cfg.sweep.optimized_N}"]
    return header


def sweep_point(cfg: ExperimentConfig, snr_db: float) -> list[float]:
    """One sweep row. Non-uniform (NU) partitions are the signal's Lloyd-Max
    thresholds; uniform (U) ones share the same overload region."""
    model = cfg.model(float(snr_db))
    snr_in = model.input_snr
    sx2 = model.sigma_x2
    g = mmse_estimator(model)
    rep = est.report(model, g)
    row = [snr_db, rep.snr_gain_db(snr_in), rep.mse]
    for n in cfg.sweep.N:
        lm = _lloyd_max_cached(model.signal, n, cfg.quantizer.max_iter)
        nu = lm.partition
        u = q.Partition.uniform(n, nu.thresholds[0], nu.thresholds[-1])
        row.append(q.overload_probability(model, nu))
        m_u, m_nu = q.cell_moments(model, u), q.cell_moments(model, nu)
        levels = {
            "qmmse_u": (m_u, q.q_mmse(model, u).levels),
            "qmmse_nu": (m_nu, q.q_mmse(model, nu).levels),
            "smmse_u": (m_u, q.s_mmse(model, u, g).levels),
            "smmse_nu": (m_nu, q.s_mmse(model, nu, g).levels),
            "oq_u": (m_u, q.oq_estimator(model.signal, u).levels),
            "oq_nu": (m_nu, lm.levels),
        }
        for k in SWEEP_KINDS:
            m, lv = levels[k]
            r = q.quantized_report(m, lv, sx2)
            row += [r.snr_gain_db(snr_in), r.mse]
    if cfg.sweep.optimized_N is not None:
        opt = q.optimize_overload(model, cfg.sweep.optimized_N)
        r = q.evaluate(model, q.q_mmse(model, opt.partition))
        row += [r.snr_gain_db(snr_in), r.mse]
    return row


def sweep_rows(cfg: ExperimentConfig) -> list[list[float]]:
    # Warm the Lloyd-Max cache once so workers do not race to compute it.
    for n in cfg.sweep.N:
        _lloyd_max_cached(cfg.signal.law(), n, cfg.quantizer.max_iter)
    return _parallel_map(functools.partial(sweep_point, cfg), cfg.sweep.grid())


def run_sweep(cfg: ExperimentConfig, out_dir=None) -> Path:
    """``sweep.csv``: SNR gain (dB) and MSE of each estimator per input SNR."""
    return write_csv(out_dir or cfg.output.dir, "sweep.csv", sweep_header(cfg), sweep_rows(cfg))


MC_HEADER = [
    "replicate", "seed", "estimator", "samples",
    "gain", "stderr_gain", "mse", "stderr_mse", "snr", "stderr_snr",
    "gain_quad", "mse_quad", "snr_quad",
]


def _mc_estimators(model, names):
    g = mmse_estimator(model)
    built = {}
    for name in names:
        if name == "mmse":
            built[name] = g
        elif name == "ummse":
            built[name] = est.ummse(g, est.report(model, g).gain)
        elif name == "identity":
            built[name] = est.identity()
        else:
            built[name] = est.zero()
    return built


def run_mc(cfg: ExperimentConfig, out_dir=None) -> Path:
    """``mc.csv``: Monte-Carlo gain, MSE and SNR with standard errors, next to
    the quadrature values. Replicate ``r`` uses seed ``seed + r`` and all
    estimators in a replicate share the same draws."""
    model = cfg.model()
    ests = _mc_estimators(model, cfg.mc.estimators)
    quad = {name: est.report(model, e) for name, e in ests.items()}

    def one(r):
        seed = cfg.mc.seed + r
        rows = []
        for name, e in ests.items():
            m = est.report(model, e, mode="monte-carlo", seed=seed, samples=cfg.mc.samples)
            qd = quad[name]
            rows.append([r, seed, name, cfg.mc.samples, m.gain, m.stderr_gain, m.mse, m.stderr_mse,
                         m.snr, m.stderr_snr, qd.gain, qd.mse, qd.snr])
        return rows

    rows = [row for chunk in _parallel_map(one, range(cfg.mc.replicates)) for row in chunk]
    return write_csv(out_dir or cfg.output.dir, "mc.csv", MC_HEADER, rows)


THRESHOLDS_HEADER = ["kind", "N", "index", "threshold", "p_ol"]


def threshold_rows(cfg: ExperimentConfig) -> list[list]:
    model = cfg.model()
    rows = []
    for n in cfg.quantizer.N:
        p = design_partition(cfg, model, n)
        pol = q.overload_probability(model, p)
        rows += [[cfg.quantizer.kind, n, i + 1, t, pol] for i, t in enumerate(p.thresholds)]
    return rows


def run_thresholds(cfg: ExperimentConfig, out_dir=None) -> Path:
    """``thresholds.csv``: designed thresholds ``y_1 .. y_{N-1}`` per N with the overload probability."""
    return write_csv(out_dir or cfg.output.dir, "thresholds.csv", THRESHOLDS_HEADER, threshold_rows(cfg))
