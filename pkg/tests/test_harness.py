import csv
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bayesnr import _kernels
from bayesnr import estimators as est
from bayesnr.errors import ConfigError
from bayesnr.harness import cli, config, runs
from bayesnr.harness.validate import run_validate

SMALL = {
    "quantizer": {"kind": "uniform", "N": [9, 17]},
    "sweep": {"input_snr_db_min": -3, "input_snr_db_max": 0, "step": 1, "N": [9, 17], "optimized_N": 9},
    "mc": {"samples": 20000, "replicates": 2},
    "curve": {"y_min": -3, "y_max": 3, "step": 0.5},
}


@pytest.fixture
def cfg_file(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(SMALL, indent=2))
    return path


def _read(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_defaults_are_reference_scenario():
    cfg = config.from_dict({})
    m = cfg.model()
    assert m.sigma_x2 == 1.0 and m.sigma_n2 == pytest.approx(16.0)
    assert cfg.sweep.grid().tolist() == list(range(-15, 1))
    assert cfg.model(-12.0).input_snr == pytest.approx(10 ** -1.2)


sections = st.fixed_dictionaries(
    {},
    optional={
        "signal": st.fixed_dictionaries({"type": st.sampled_from(["laplace", "gaussian"]), "sigma_x": st.floats(0.1, 10)}),
        "noise": st.one_of(
            st.fixed_dictionaries({"sigma_n": st.floats(0.1, 10), "p0": st.floats(0, 1), "R_pow": st.floats(1e-4, 10)}),
            st.fixed_dictionaries({"sigmas": st.lists(st.floats(0.1, 10), min_size=2, max_size=2), "p0": st.floats(0, 1)}),
        ),
        "quantizer": st.fixed_dictionaries(
            {"kind": st.sampled_from(["uniform", "lloyd-max", "sweep"]), "N": st.lists(st.integers(3, 200), min_size=1, max_size=4)}
        ),
        "mc": st.fixed_dictionaries({"samples": st.integers(1, 10**7), "seed": st.integers(0, 2**31)}),
        "mode": st.sampled_from(["closed", "quadrature"]),
    },
)


@settings(max_examples=60, deadline=None)
@given(raw=sections)
def test_config_round_trip(raw):
    cfg = config.from_dict(raw)
    text = config.dumps(cfg)
    again = config.loads(text)
    assert again == cfg
    assert config.dumps(again) == text


@pytest.mark.parametrize(
    "text, path, line",
    [
        ('{\n  "noise": {\n    "p0": 2\n  }\n}', "noise.p0", 3),
        ('{\n  "signal": {"sigma_x": -1}\n}', "signal.sigma_x", 2),
        ('{\n  "mc": {\n    "samples": 5,\n    "colour": 1\n  }\n}', "mc.colour", 4),
        ('{\n  "quantizer": {\n    "kind": "uniform-overload"\n  }\n}', "quantizer.p_ol", None),
        ('{\n  "sweep": {"step": 0}\n}', "sweep.step", 2),
        ('{"bogus": 1}', "bogus", 1),
        ('{\n  "noise": {,}\n}', "<json>", 2),
    ],
)
def test_config_diagnostics(text, path, line):
    with pytest.raises(config.ConfigFieldError) as info:
        config.loads(text)
    assert info.value.path == path
    if line is not None:
        assert info.value.line == line


def test_noise_rescaling_keeps_shape():
    spec = config.NoiseSpec(sigma_n=None, sigmas=(1.0, 3.0), p0=0.8)
    spec.validate("noise")
    law = spec.law(sigma_n=2 * spec.total_sigma())
    assert law.sigmas == pytest.approx((2.0, 6.0))


def test_thread_env(monkeypatch):
    monkeypatch.setenv("BAYESNR_THREADS", "3")
    assert runs.thread_count() == 3
    monkeypatch.setenv("BAYESNR_THREADS", "zero")
    with pytest.raises(ConfigError):
        runs.thread_count()


def test_cli_exit_codes(tmp_path, cfg_file, monkeypatch):
    out = tmp_path / "out"
    assert cli.main(["thresholds", str(cfg_file), "--out", str(out)]) == 0
    bad = tmp_path / "bad.json"
    bad.write_text('{"noise": {"p0": 3}}')
    assert cli.main(["curve", str(bad), "--out", str(out)]) == 1
    assert cli.main(["curve", str(tmp_path / "missing.json")]) == 1
    monkeypatch.setenv("BAYESNR_THREADS", "-2")
    assert cli.main(["sweep", str(cfg_file), "--out", str(out)]) == 1


def test_cli_numerical_failure_exit_code(tmp_path):
    path = tmp_path / "c.json"
    # Lloyd-Max at N=127 cannot converge in 10 iterations.
    path.write_text(json.dumps({"quantizer": {"kind": "lloyd-max", "N": [127], "max_iter": 10}}))
    assert cli.main(["thresholds", str(path), "--out", str(tmp_path)]) == 2


def test_curve_csv(tmp_path, cfg_file):
    cfg = config.load(cfg_file)
    rows = _read(runs.run_curve(cfg, tmp_path))
    assert rows[0] == ["y", "g_mmse", "g_qmmse_N9", "g_qmmse_N17", "g_smmse_N9", "g_smmse_N17"]
    y = np.array([float(r[0]) for r in rows[1:]])
    g = np.array([float(r[1]) for r in rows[1:]])
    assert np.allclose(g, est.mmse_numeric(cfg.model())(y), atol=1e-6)
    # Odd model: the curve reflects.
    assert np.allclose(g, -g[::-1], atol=1e-12)
    assert (tmp_path / "curve.csv").read_bytes().count(b"\r") == 0


def test_outputs_deterministic(tmp_path, cfg_file, monkeypatch):
    cfg = config.load(cfg_file)
    for name, fn in [("sweep.csv", runs.run_sweep), ("mc.csv", runs.run_mc), ("thresholds.csv", runs.run_thresholds)]:
        monkeypatch.setenv("BAYESNR_THREADS", "1")
        a = fn(cfg, tmp_path / "a").read_bytes()
        monkeypatch.setenv("BAYESNR_THREADS", "4")
        b = fn(cfg, tmp_path / "b").read_bytes()
        assert a == b, name


def test_sweep_rows(tmp_path, cfg_file):
    cfg = config.load(cfg_file)
    rows = _read(runs.run_sweep(cfg, tmp_path))
    header, body = rows[0], rows[1:]
    assert header == runs.sweep_header(cfg)
    assert [float(r[0]) for r in body] == [-3.0, -2.0, -1.0, 0.0]
    for r in body:
        rec = dict(zip(header, map(float, r)))
        assert all(np.isfinite(v) for k, v in rec.items() if k.startswith("gain_db"))
        for k, v in rec.items():
            if k.startswith("mse_"):
                assert rec["mse_mmse"] <= v + 1e-9
        for n in (9, 17):
            for side in ("u", "nu"):
                j = rec[f"mse_qmmse_{side}_N{n}"]
                assert j <= rec[f"mse_smmse_{side}_N{n}"] + 1e-12
                assert j <= rec[f"mse_oq_{side}_N{n}"] + 1e-12


def test_mc_identity_snr(tmp_path, cfg_file):
    cfg = config.load(cfg_file)
    rows = _read(runs.run_mc(cfg, tmp_path))
    header = rows[0]
    recs = [dict(zip(header, r)) for r in rows[1:]]
    assert [r["seed"] for r in recs] == ["0"] * 3 + ["1"] * 3
    m = cfg.model()
    for r in recs:
        if r["estimator"] == "identity":
            ratio = float(r["snr"]) / m.input_snr
            assert abs(ratio - 1) < 4 * float(r["stderr_snr"]) / m.input_snr


def test_fmt():
    assert runs.fmt(1 / 3) == "0.333333333333"
    assert runs.fmt(float("inf")) == "inf"
    assert runs.fmt(7) == "7"


def test_validate_passes():
    report = run_validate()
    assert report.passed, report.to_json()
    assert json.loads(report.to_json())["passed"] is True


def test_validate_catches_corrupted_kernel(monkeypatch):
    base = _kernels.impl

    class Corrupted:
        BACKEND = "corrupted"

        def __getattr__(self, name):
            return getattr(base, name)

        @staticmethod
        def lm_mmse(y, alpha, p, beta):
            return base.lm_mmse(y, alpha * (1 + 1e-3), p, beta)

        @staticmethod
        def lm_dfunc(y, alpha, p, beta):
            return base.lm_dfunc(y, alpha * (1 + 1e-3), p, beta)

    monkeypatch.setattr(_kernels, "impl", Corrupted())
    report = run_validate()
    assert not report.passed
    failed = {r.name for r in report.results if not r.passed}
    assert "closed_vs_quadrature" in failed
    assert cli.main(["validate"]) == 3
