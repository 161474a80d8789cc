import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bayesnr import estimators as est
from bayesnr.distributions import GaussianLaw, LaplaceLaw, ObservationModel, reference_model
from bayesnr.errors import DegenerateGain, DivisionNearZero, NearDegenerateRates
from bayesnr.numerics import integrate


def test_identity_has_input_snr(ref):
    r = est.report(ref, est.identity())
    assert r.gain == pytest.approx(1.0, abs=1e-9)
    assert r.snr == pytest.approx(ref.input_snr, rel=1e-8)
    assert r.mse == pytest.approx(ref.sigma_n2, rel=1e-8)


def test_zero_estimator_conventions(ref):
    r = est.report(ref, est.zero())
    assert r.snr == 0.0 and r.gain == 0.0 and r.mse == pytest.approx(ref.sigma_x2)
    assert r.snr_db == -math.inf


def test_noiseless_output_is_infinite_snr():
    assert est.snr_from_moments(1.0, 1.0, 1.0)[1] == math.inf


def test_gaussian_mmse_is_linear():
    m = ObservationModel(GaussianLaw(1.0), GaussianLaw(0.5))
    g = est.mmse_numeric(m)
    y = np.linspace(-4, 4, 9)
    assert np.allclose(g(y), y / 1.25, atol=1e-8)
    r = est.report(m, g)
    assert r.gain == pytest.approx(0.8, rel=1e-8)
    assert r.mse == pytest.approx(0.2, rel=1e-8)


def test_closed_matches_numeric(ref, backend):
    y = np.arange(-20.0, 20.0001, 0.5)
    assert np.max(np.abs(est.mmse_closed(ref)(y) - est.mmse_numeric(ref)(y))) < 1e-8


def test_closed_mmse_is_odd_and_finite_far_out(ref):
    g = est.mmse_closed(ref)
    y = np.array([0.0, 1.0, 50.0, 700.0, 1e4])
    v = g(y)
    assert np.all(np.isfinite(v))
    assert np.allclose(g(-y), -v)
    assert v[0] == 0.0


def test_mmse_closed_rejects_degenerate_rates():
    m = ObservationModel(LaplaceLaw(1.0), LaplaceLaw(1.0 + 1e-9))
    with pytest.raises(NearDegenerateRates):
        est.mmse_closed(m)
    y = np.array([0.3, 2.0])
    m_exact = ObservationModel(LaplaceLaw(1.0), LaplaceLaw(1.0), mode="quadrature")
    assert np.allclose(est.mmse_numeric(m)(y), est.mmse_numeric(m_exact)(y), rtol=1e-6)


def test_mmse_numeric_division_near_zero(ref):
    with pytest.raises(DivisionNearZero):
        est.mmse_numeric(ref)(np.array([1e6]))


def test_jmmse_by_direct_quadrature(ref):
    # E{(g(y) - x)^2} = E{x^2} - E{g^2} for the conditional mean.
    g = est.mmse_closed(ref)
    r = est.report(ref, g)
    power = integrate(lambda y: g(y) ** 2 * ref.pdf(y), -math.inf, math.inf, points=[0.0])
    assert r.mse == pytest.approx(ref.sigma_x2 - power, rel=1e-9)
    assert r.mse == pytest.approx(0.364352, abs=1e-6)


@pytest.mark.parametrize("snr_db", [-12.0, -6.0, 0.0])
def test_mmse_identity_suite(snr_db):
    m = reference_model(snr_db)
    g = est.mmse_closed(m)
    r = est.report(m, g)
    t = est.mmse_identities(r.gain, m.sigma_x2)
    assert r.output_power == pytest.approx(t.output_power, rel=1e-6)
    assert r.mse == pytest.approx(t.mmse, rel=1e-6)
    assert r.output_noise_var == pytest.approx(t.noise_power, rel=1e-6)
    assert r.snr == pytest.approx(t.msnr, rel=1e-6)
    assert est.report(m, est.ummse(g, r.gain)).mse == pytest.approx(t.ummse_mse, rel=1e-6)


def test_mmse_identities_edges():
    assert est.mmse_identities(1.0, 2.0).msnr == math.inf
    assert est.mmse_identities(0.0, 2.0).ummse_mse == math.inf
    with pytest.raises(ValueError):
        est.mmse_identities(1.5, 1.0)


def test_ummse_validation():
    with pytest.raises(DegenerateGain):
        est.ummse(est.identity(), 0.0)
    with pytest.raises(ValueError):
        est.ummse(est.identity(), 1.5)


@settings(max_examples=15, deadline=None)
@given(a=st.floats(0.05, 20.0) | st.floats(-20.0, -0.05))
def test_snr_scale_invariance(a, ref):
    g = est.soft_limiter(2.0)
    base = est.report(ref, g).snr
    assert est.report(ref, g.scaled(a)).snr == pytest.approx(base, rel=1e-8)


def test_mmse_maximizes_snr(ref):
    best = est.report(ref, est.mmse_closed(ref)).snr
    for g in (est.identity(), est.soft_limiter(0.5), est.soft_limiter(4.0), est.Estimator(np.tanh)):
        assert est.report(ref, g).snr <= best + 1e-6


def test_soft_limiter_scan_non_equivalence(ref):
    scan = est.soft_limiter_scan(ref, n=80)
    assert scan.beta_mse != scan.beta_snr
    with pytest.raises(ValueError):
        est.soft_limiter(0.0)


def test_monte_carlo_matches_quadrature(ref):
    g = est.mmse_closed(ref)
    q = est.report(ref, g)
    m = est.report(ref, g, mode="monte-carlo", seed=3, samples=200_000)
    assert abs(m.gain - q.gain) < 4 * m.stderr_gain
    assert abs(m.mse - q.mse) < 4 * m.stderr_mse
    assert abs(m.snr - q.snr) < 4 * m.stderr_snr
    again = est.report(ref, g, mode="monte-carlo", seed=3, samples=200_000)
    assert again == m


def test_report_mode_validation(ref):
    with pytest.raises(ValueError):
        est.report(ref, est.identity(), mode="exact")
    with pytest.raises(ValueError):
        est.report(ref, est.identity(), mode="monte-carlo", samples=1)


def test_snr_gain_helpers(ref):
    r = est.report(ref, est.identity())
    assert r.snr_gain(ref.input_snr) == pytest.approx(1.0, rel=1e-8)
    assert r.snr_gain_db(ref.input_snr) == pytest.approx(0.0, abs=1e-7)
