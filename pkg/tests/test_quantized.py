import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bayesnr import bem
from bayesnr import estimators as est
from bayesnr import quantized as q
from bayesnr.distributions import GaussianLaw, LaplaceLaw
from bayesnr.errors import NoBracket, NonConvergent
from bayesnr.numerics import integrate, rng_uniform


def test_partition_validation():
    with pytest.raises(ValueError):
        q.Partition((1.0, 1.0))
    with pytest.raises(ValueError):
        q.Partition((0.0, math.inf))
    p = q.Partition((-1.0, 2.0))
    assert p.n_cells == 3
    assert list(p.cell_index([-5.0, -1.0, -0.5, 2.0, 2.1])) == [0, 0, 1, 1, 2]
    assert q.Partition().n_cells == 1


def test_uniform_partition():
    p = q.Partition.symmetric_uniform(5, 3.0)
    assert p.thresholds == (-3.0, -1.0, 1.0, 3.0)
    assert p.interior_width() == pytest.approx(2.0)
    assert q.Partition.uniform(2, 0.5, 0.5).thresholds == (0.5,)


def test_single_cell(ref):
    m = q.cell_moments(ref, q.Partition())
    assert m.theta.tolist() == [0.0] and m.r.tolist() == [1.0]
    g = q.q_mmse(ref, q.Partition())
    assert g.levels.tolist() == [0.0]
    assert q.q_mmse_mse(m, ref.sigma_x2) == ref.sigma_x2


def test_two_cells_symmetric(ref):
    g = q.q_mmse(ref, q.Partition((0.0,)))
    m = g.moments
    assert m.r == pytest.approx([0.5, 0.5], abs=1e-15)
    assert m.theta[1] == pytest.approx(-m.theta[0], abs=1e-15)
    assert g.levels[1] == pytest.approx(m.theta[1] / 0.5)


def test_telescoping_sums(ref):
    m = q.cell_moments(ref, q.Partition.symmetric_uniform(65, 10.0))
    assert abs(np.sum(m.theta)) <= 1e-9
    assert abs(np.sum(m.r) - 1.0) <= 1e-9
    assert np.all(m.r > 0)


def test_cell_moments_match_direct_quadrature(ref):
    p = q.Partition((-4.0, -0.5, 1.0, 6.0))
    m = q.cell_moments(ref, p)
    e = p.edges
    for i in range(p.n_cells):
        lo, hi = e[i], e[i + 1]
        assert m.r[i] == pytest.approx(integrate(ref.pdf, lo, hi, points=[0.0]), abs=1e-10)
        assert m.theta[i] == pytest.approx(integrate(ref.numerator, lo, hi, points=[0.0]), abs=1e-10)


def test_quadrature_mode_moments_agree(ref):
    p = q.Partition.symmetric_uniform(9, 6.0)
    a, b = q.cell_moments(ref, p), q.cell_moments(ref.quadrature(), p)
    assert b.mode == "quadrature"
    assert np.allclose(a.theta, b.theta, atol=1e-9) and np.allclose(a.r, b.r, atol=1e-9)


def test_empty_cells_get_zero_level(ref):
    p = q.Partition((-1.0, 0.0, 1e4, 1e4 + 1.0))
    g = q.q_mmse(ref, p)
    assert g.moments.empty.tolist() == [False, False, False, True, True]
    assert g.levels[3] == 0.0 and g.levels[4] == 0.0


def test_symmetry_of_levels(ref):
    g = q.q_mmse(ref, q.Partition.symmetric_uniform(17, 8.0))
    assert np.allclose(g.levels, -g.levels[::-1], atol=1e-10)


def test_equivalence_with_bem(ref):
    p = q.Partition.symmetric_uniform(33, 7.0)
    g = q.q_mmse(ref, p)
    sys = bem.assemble(ref, bem.rectangular_basis(p))
    assert np.max(np.abs(bem.b_mmse(sys).g - g.levels)) <= 1e-12
    assert q.q_mmse_mse(g.moments, ref.sigma_x2) == pytest.approx(bem.bem_mse(sys, g.levels), abs=1e-12)
    # Q-MSNR: the Q-MMSE levels attain the largest SNR of the basis.
    assert bem.bem_snr(sys, g.levels) == pytest.approx(bem.b_msnr_value(sys), rel=1e-9)


def test_quantized_report_matches_quadrature_report(ref):
    g = q.q_mmse(ref, q.Partition.symmetric_uniform(9, 10.0))
    a = q.evaluate(ref, g)
    b = est.report(ref, g.to_estimator())
    assert a.mse == pytest.approx(b.mse, rel=1e-8)
    assert a.snr == pytest.approx(b.snr, rel=1e-8)


@settings(max_examples=30, deadline=None)
@given(
    t=st.lists(st.floats(-15, 15), min_size=1, max_size=12, unique=True),
    split=st.floats(-15, 15),
)
def test_refinement_never_increases_mse(ref, t, split):
    t = sorted(t)
    if any(b - a < 1e-6 for a, b in zip(t, t[1:])) or min(abs(split - v) for v in t) < 1e-6:
        return
    coarse = q.cell_moments(ref, q.Partition(t))
    fine = q.cell_moments(ref, q.Partition(sorted(t + [split])))
    assert q.q_mmse_mse(fine, 1.0) <= q.q_mmse_mse(coarse, 1.0) + 1e-12


def test_optimality_on_partition(ref):
    p = q.Partition.symmetric_uniform(65, 10.0)
    g = q.q_mmse(ref, p)
    j = q.q_mmse_mse(g.moments, ref.sigma_x2)
    rng = rng_uniform(0)
    rivals = [q.s_mmse(ref, p).levels, q.oq_estimator(ref.signal, p).levels]
    rivals += [g.levels + rng.standard_normal(p.n_cells) * 0.2 for _ in range(1000)]
    for lv in rivals:
        assert q.quantized_report(g.moments, lv, ref.sigma_x2).mse >= j - 1e-12


def test_s_mmse_points_and_levels(ref):
    p = q.Partition((-3.0, -1.0, 1.0, 3.0))
    pts = q.s_mmse_points(p)
    assert pts.tolist() == [-4.0, -2.0, 0.0, 2.0, 4.0]
    g = q.s_mmse(ref, p)
    assert np.allclose(g.levels, est.mmse_closed(ref)(pts))
    assert np.allclose(g.levels, -g.levels[::-1])
    assert q.s_mmse_points(q.Partition((0.0,)), outer_width=2.0).tolist() == [-1.0, 1.0]
    with pytest.raises(ValueError):
        q.s_mmse(ref, q.Partition())


def test_s_mmse_tends_to_q_mmse(ref):
    gaps = []
    for n in (17, 65, 257):
        p = q.Partition.symmetric_uniform(n, 6.0)
        inner = slice(1, -1)
        gaps.append(np.max(np.abs(q.s_mmse(ref, p).levels[inner] - q.q_mmse(ref, p).levels[inner])))
    assert gaps[0] > gaps[1] > gaps[2]


def test_oq_levels_nondecreasing_and_odd():
    p = q.Partition.symmetric_uniform(9, 3.0)
    g = q.oq_estimator(GaussianLaw(1.0), p)
    assert np.all(np.diff(g.levels) >= 0)
    assert np.allclose(g.levels, -g.levels[::-1], atol=1e-14)


def test_lloyd_max_trivial_cases():
    r1 = q.lloyd_max(LaplaceLaw(1.0), 1)
    assert r1.levels.tolist() == [0.0] and r1.distortion == 1.0
    r2 = q.lloyd_max(LaplaceLaw(1.0), 2)
    assert r2.partition.thresholds[0] == pytest.approx(0.0, abs=1e-12)
    assert r2.levels == pytest.approx([-1 / math.sqrt(2), 1 / math.sqrt(2)])


def _dp_quantizer(law, n_levels, lim=14.0, bins=2800):
    """Best distortion over thresholds restricted to a fine grid (exact cell moments)."""
    grid = np.linspace(-lim, lim, bins + 1)
    edges = np.concatenate([[-np.inf], grid[1:-1], [np.inf]])
    cdf = law.cdf(edges)
    pm = law.partial_mean(edges)
    P = cdf[None, :] - cdf[:, None]
    M = pm[None, :] - pm[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        gain = np.where(P > 0, M * M / np.where(P > 0, P, 1), -np.inf)
    K = len(edges)
    best = np.full(K, -np.inf)
    best[1:] = gain[0, 1:]
    for _ in range(n_levels - 1):
        best = np.max(best[:, None] + np.where(np.triu(np.ones((K, K), bool), 1), gain, -np.inf), axis=0)
    return law.variance - best[-1]


def test_lloyd_max_matches_dp_oracle():
    law = LaplaceLaw(1.0)
    r = q.lloyd_max(law, 8)
    assert r.distortion == pytest.approx(_dp_quantizer(law, 8), abs=1e-4)


def test_lloyd_max_history_non_increasing():
    r = q.lloyd_max(LaplaceLaw(1.0), 17)
    h = np.asarray(r.history)
    assert np.all(np.diff(h) <= 1e-15)
    assert r.history[-1] == pytest.approx(r.distortion)


def test_lloyd_max_iteration_cap():
    with pytest.raises(NonConvergent):
        q.lloyd_max(LaplaceLaw(1.0), 65, max_iter=50)


def test_overload_partition(ref):
    p = q.uniform_partition_for_overload(ref, 17, 0.0327)
    assert p.thresholds[-1] == pytest.approx(10.0, abs=0.05)
    assert q.overload_probability(ref, p) == pytest.approx(0.0327, abs=1e-10)
    L = q.overload_limit(ref, 1 - 1e-9)
    assert 0 < L < 1e-6
    with pytest.raises(NoBracket):
        q.overload_limit(ref, 1.0)
    with pytest.raises(ValueError):
        q.uniform_partition_for_overload(ref, 2, 0.1)


def test_optimize_overload_contract(ref):
    single = q.optimize_overload(ref, 9, [4.0])
    assert single.L == 4.0
    res = q.optimize_overload(ref, 9, [8.0, 2.0, 4.0, 6.0])
    assert res.snr_gain == max(res.gains)
    assert res.grid.tolist() == [2.0, 4.0, 6.0, 8.0]
    tie = q.optimize_overload(ref, 9, [3.0, 3.0])
    assert tie.L == 3.0
    with pytest.raises(ValueError):
        q.optimize_overload(ref, 9, [])


def test_quantized_estimator_shape_check():
    with pytest.raises(ValueError):
        q.QuantizedEstimator(q.Partition((0.0,)), [1.0, 2.0, 3.0])
