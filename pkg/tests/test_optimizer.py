import math

import numpy as np
import pytest

import pulsemix as pm
from pulsemix.lp import solve_lp
from pulsemix.optimizer import STRICT_MARGIN


def test_detection_spec_validation():
    pm.DetectionSpec(xi_det=0.0, xi_isi=8.0, L0=1)
    with pytest.raises(ValueError):
        pm.DetectionSpec(xi_det=-1.0, xi_isi=8.0, L0=10)
    with pytest.raises(ValueError):
        pm.DetectionSpec(xi_det=15.0, xi_isi=0.0, L0=10)
    with pytest.raises(ValueError):
        pm.DetectionSpec(xi_det=15.0, xi_isi=8.0, L0=0)
    with pytest.raises(ValueError):
        pm.DetectionSpec(xi_det=15.0, xi_isi=8.0, L0=10, l0=-1)


def test_build_windows_marks_exact_rows():
    spec = pm.DetectionSpec(xi_det=15.0, xi_isi=8.0, L0=150)
    w_det, w_isi = pm.build_windows(spec, 100, 600)
    assert w_det.shape == (600,) and w_isi.shape == (600,)
    inside = slice(100, 250)
    assert np.all(w_det[inside] == 15.0)
    assert np.count_nonzero(w_det) == 150
    assert np.all(w_isi[inside] == 8.0)
    # outside the window interference is unconstrained, not zero
    assert np.count_nonzero(~np.isnan(w_isi)) == 150
    with pytest.raises(ValueError):
        pm.build_windows(spec, 451, 600)
    with pytest.raises(ValueError):
        pm.build_windows(spec, -1, 600)


def test_round_mixture_half_away():
    particles = pm.ParticleSet.from_relative([2.0], 8e-12, 3)  # weight 8
    m_rounded, counts = pm.round_mixture(np.array([10.4]), particles)
    assert counts.tolist() == [1] and m_rounded.tolist() == [8.0]
    m_rounded, counts = pm.round_mixture(np.array([12.0]), particles)
    assert counts.tolist() == [2] and m_rounded.tolist() == [16.0]
    m_rounded, counts = pm.round_mixture(np.array([3.9]), particles)
    assert counts.tolist() == [0] and m_rounded.tolist() == [0.0]
    with pytest.raises(ValueError):
        pm.round_mixture(np.array([-1.0]), particles)


def test_zero_detection_threshold_is_free(sc600, particles):
    spec = pm.DetectionSpec(xi_det=0.0, xi_isi=8.0, L0=150)
    res = pm.optimize_mixture(sc600, particles, spec)
    assert res.feasible and res.N == 0.0
    assert res.l0_star == 0  # every offset works; ties go to the smallest
    np.testing.assert_array_equal(res.m, np.zeros(6))


def test_baseline_design(sc600, particles):
    spec = pm.DetectionSpec(xi_det=15.0, xi_isi=8.0, L0=150)
    res = pm.optimize_mixture(sc600, particles, spec)
    assert res.feasible
    assert res.l0_star == 18
    assert res.N == pytest.approx(116189.19769426783, rel=1e-9)
    assert len(res.per_l0) == 451
    assert res.counts is not None and res.counts.dtype == np.int64
    # the solution meets both constraint families on the chosen window
    w = slice(res.l0_star, res.l0_star + 150)
    assert np.all(sc600.P[w] @ res.m >= 15.0 * (1.0 - 1e-9))
    assert np.all(sc600.P_r[w] @ res.m <= 8.0 * (1.0 + 1e-9))
    # rounding moves the objective by at most half a count step per size
    assert abs(res.N_rounded - res.N) <= 0.5 * particles.rho_pow.sum() + 1e-9


def test_matches_direct_full_lp(params, particles):
    # exhaustive check of the row-generating search against solving every
    # offset's complete LP directly
    sc = pm.sample_matrices(params, particles, 60, 1e-9)
    spec = pm.DetectionSpec(xi_det=15.0, xi_isi=8.0, L0=15)
    res = pm.optimize_mixture(sc, particles, spec)
    rhs_isi = 8.0 * (1.0 - STRICT_MARGIN)
    best_obj, best_l0 = math.inf, None
    for l0 in range(0, 60 - 15 + 1):
        prob = pm.LinearProgram(
            c=np.ones(particles.M),
            A_ge=sc.P[l0 : l0 + 15],
            b_ge=np.full(15, 15.0),
            A_le=sc.P_r[l0 : l0 + 15],
            b_le=np.full(15, rhs_isi),
        )
        direct = solve_lp(prob)
        status = "optimal" if direct.status == "optimal" else "infeasible"
        assert res.per_l0[l0][1] == status
        if direct.status == "optimal":
            assert res.per_l0[l0][2] == pytest.approx(direct.objective, rel=1e-8, abs=1e-6)
            if direct.objective < best_obj:
                best_obj, best_l0 = direct.objective, l0
    assert res.feasible
    assert res.l0_star == best_l0
    assert res.N == pytest.approx(best_obj, rel=1e-8)


def test_fixed_offset(sc600, particles):
    spec = pm.DetectionSpec(xi_det=15.0, xi_isi=8.0, L0=150, l0=18)
    res = pm.optimize_mixture(sc600, particles, spec)
    assert res.l0_star == 18 and len(res.per_l0) == 1
    assert res.N == pytest.approx(116189.19769426783, rel=1e-9)
    with pytest.raises(ValueError):
        pm.optimize_mixture(
            sc600, particles, pm.DetectionSpec(xi_det=15.0, xi_isi=8.0, L0=150, l0=500)
        )


def test_infeasible_single_size(sc600, particles):
    sc1 = pm.restrict_channel(sc600, [5])
    spec = pm.DetectionSpec(xi_det=15.0, xi_isi=8.0, L0=150)
    res = pm.optimize_mixture(sc1, particles.subset([5]), spec)
    assert not res.feasible
    assert res.m is None and res.counts is None
    assert math.isnan(res.N) and math.isnan(res.N_rounded)
    assert res.l0_star is None
    assert all(status == "infeasible" for _, status, _ in res.per_l0)
    assert all(math.isnan(obj) for _, _, obj in res.per_l0)


def test_relaxing_interference_never_hurts(sc600, particles):
    objs = []
    for xi_isi in (8.0, 10.0, 15.0):
        spec = pm.DetectionSpec(xi_det=15.0, xi_isi=xi_isi, L0=150)
        objs.append(pm.optimize_mixture(sc600, particles, spec).N)
    assert objs[0] >= objs[1] >= objs[2]


def test_objective_scales_with_detection_threshold(sc600, particles):
    # with the interference cap far away the problem is a pure scaling
    lo = pm.optimize_mixture(
        sc600, particles, pm.DetectionSpec(xi_det=15.0, xi_isi=1e6, L0=30)
    )
    hi = pm.optimize_mixture(
        sc600, particles, pm.DetectionSpec(xi_det=30.0, xi_isi=1e6, L0=30)
    )
    assert hi.N == pytest.approx(2.0 * lo.N, rel=1e-9)


def test_repair_up_restores_detection(sc600, particles):
    spec = pm.DetectionSpec(xi_det=15.0, xi_isi=8.0, L0=150)
    res = pm.optimize_mixture(sc600, particles, spec, repair="up")
    assert res.feasible
    assert np.all(res.m_rounded >= res.m - 1e-9 * np.abs(res.m))
    w = slice(res.l0_star, res.l0_star + 150)
    assert np.all(sc600.P[w] @ res.m_rounded >= 15.0 * (1.0 - 1e-9))
    with pytest.raises(ValueError):
        pm.optimize_mixture(sc600, particles, spec, repair="sideways")


def test_mixture_dominates_each_single(sc600, particles):
    spec = pm.DetectionSpec(xi_det=15.0, xi_isi=8.0, L0=150)
    full = pm.optimize_mixture(sc600, particles, spec)
    singles, best = pm.single_size_benchmark(sc600, particles, spec)
    assert best == 4  # 90 nm is the best size that stays feasible here
    feasible_n = [r.N for r in singles if r.feasible]
    assert feasible_n
    assert full.N <= min(feasible_n) * (1.0 + 1e-9)
    assert not singles[5].feasible


def test_single_size_duration_roots(params):
    D = 4e-12
    t1, t2 = pm.single_size_duration(1e5, D, params, 15.0)
    assert 0.0 < t1 < t2
    for t in (t1, t2):
        assert 1e5 * pm.cir_eval(t, D, params) == pytest.approx(15.0, rel=1e-5)
    # far above threshold the right root moves beyond the doubled bracket
    t1, t2 = pm.single_size_duration(1e9, D, params, 15.0)
    assert 1e9 * pm.cir_eval(t2, D, params) == pytest.approx(15.0, rel=1e-4)
    assert t2 > 2.0 * params.d**2 / (6.0 * D)


def test_single_size_duration_edges(params):
    D = 4e-12
    _, p_pk = pm.cir_peak(D, params)
    assert pm.single_size_duration(1e4, D, params, 15.0) is None
    t1, t2 = pm.single_size_duration(15.0 / p_pk, D, params, 15.0)
    assert t1 == t2 == pytest.approx(params.d**2 / (6.0 * D), rel=1e-12)
    with pytest.raises(ValueError):
        pm.single_size_duration(-1.0, D, params, 15.0)
    with pytest.raises(ValueError):
        pm.single_size_duration(1e5, D, params, 0.0)


def test_sweep_ordering_and_workers(params, particles):
    sc = pm.sample_matrices(params, particles, 120, 1e-9)
    spec = pm.DetectionSpec(xi_det=15.0, xi_isi=8.0, L0=1)
    fracs = [0.05, 0.1]
    xis = [8.0, 10.0]
    pts = pm.sweep_tradeoff(params, particles, spec, fracs, xis, L=120, sc=sc)
    assert [(p.xi_isi, p.T0_frac) for p in pts] == [
        (8.0, 0.05),
        (8.0, 0.1),
        (10.0, 0.05),
        (10.0, 0.1),
    ]
    pts2 = pm.sweep_tradeoff(params, particles, spec, fracs, xis, L=120, sc=sc, workers=3)
    for a, b in zip(pts, pts2):
        assert a.N_all == b.N_all and a.N_single == b.N_single
        assert a.best_single_size == b.best_single_size


def test_sweep_window_never_empty(params, particles):
    sc = pm.sample_matrices(params, particles, 120, 1e-9)
    spec = pm.DetectionSpec(xi_det=15.0, xi_isi=8.0, L0=1)
    (pt,) = pm.sweep_tradeoff(params, particles, spec, [0.001], [8.0], L=120, sc=sc)
    ref = pm.optimize_mixture(sc, particles, pm.DetectionSpec(xi_det=15.0, xi_isi=8.0, L0=1))
    assert pt.N_all == pytest.approx(ref.N, rel=1e-12)
