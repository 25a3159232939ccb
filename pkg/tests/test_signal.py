import math

import numpy as np
import pytest

import pulsemix as pm


def test_sampled_channel_grid(sc600, params, particles):
    assert sc600.L == 600
    assert sc600.dt == pytest.approx(0.2, rel=1e-15)
    assert sc600.P.shape == (600, particles.M)
    assert sc600.P_r.shape == (600, particles.M)
    # the pulse starts at zero, the interference series does not
    assert np.all(sc600.P[0] == 0.0)
    assert np.all(sc600.P_r[0] > 0.0)
    assert np.all(sc600.P >= 0.0)


def test_sample_columns_match_pointwise(sc600, params, particles):
    t = np.arange(600) * sc600.dt
    for i, D in enumerate(particles.D):
        np.testing.assert_array_equal(sc600.P[:, i], pm.cir_eval(t, D, params))


def test_pulse_column_peaks_at_expected_sample(sc600, params, particles):
    for i, D in enumerate(particles.D):
        t_pk, _ = pm.cir_peak(D, params)
        k = int(np.argmax(sc600.P[:, i]))
        assert abs(k * sc600.dt - t_pk) <= sc600.dt


def test_sample_matrices_validation(params, particles):
    with pytest.raises(ValueError):
        pm.sample_matrices(params, particles, 1)
    with pytest.raises(ValueError):
        pm.sample_matrices(params, particles, 10.0)


def test_signal_vector_validation():
    with pytest.raises(ValueError):
        pm.SignalVector(values=np.array([1.0, -0.5]), kind="pulse")
    with pytest.raises(ValueError):
        pm.SignalVector(values=np.array([1.0]), kind="spectrum")


def test_mixture_validation():
    with pytest.raises(ValueError):
        pm.Mixture(m=np.array([1.0, -2.0]))
    with pytest.raises(ValueError):
        pm.Mixture(m=np.ones((2, 2)))
    with pytest.raises(ValueError):
        pm.Mixture(m=np.ones(3), counts=np.array([1, 2]))
    mix = pm.Mixture(m=np.array([3.0, 0.0]))
    assert pm.peak_detection_value(mix) == 3.0


def test_pulse_shape_is_linear(sc600):
    rng = np.random.default_rng(3)
    m1 = rng.uniform(0.0, 1e5, 6)
    m2 = rng.uniform(0.0, 1e5, 6)
    h1 = pm.pulse_shape(sc600, pm.Mixture(m=m1)).values
    h2 = pm.pulse_shape(sc600, pm.Mixture(m=m2)).values
    h12 = pm.pulse_shape(sc600, pm.Mixture(m=m1 + m2)).values
    np.testing.assert_allclose(h12, h1 + h2, rtol=1e-12, atol=1e-30)
    h_scaled = pm.pulse_shape(sc600, pm.Mixture(m=2.5 * m1)).values
    np.testing.assert_allclose(h_scaled, 2.5 * h1, rtol=1e-12, atol=0.0)


def test_shape_kinds_and_values(sc600):
    m = np.array([1e5, 0.0, 0.0, 0.0, 0.0, 2e4])
    mix = pm.Mixture(m=m)
    pulse = pm.pulse_shape(sc600, mix)
    isi = pm.isi_shape(sc600, mix)
    assert pulse.kind == "pulse" and isi.kind == "isi"
    np.testing.assert_allclose(pulse.values, sc600.P @ m, rtol=0.0)
    np.testing.assert_allclose(isi.values, sc600.P_r @ m, rtol=0.0)


def test_mixture_length_checked(sc600):
    with pytest.raises(ValueError):
        pm.pulse_shape(sc600, pm.Mixture(m=np.ones(4)))


def test_restrict_channel(sc600, particles):
    sub = pm.restrict_channel(sc600, [1, 4])
    np.testing.assert_array_equal(sub.P[:, 0], sc600.P[:, 1])
    np.testing.assert_array_equal(sub.P_r[:, 1], sc600.P_r[:, 4])
    assert sub.particles.rho == (particles.rho[1], particles.rho[4])


@pytest.fixture(scope="module")
def sc30(params, particles):
    small = particles.subset([0, 5])
    return pm.sample_matrices(params, small, 30, 1e-9)


def test_ook_single_release(sc30):
    mix = pm.Mixture(m=np.array([1e5, 3e4]))
    out = pm.ook_signal([1, 0, 0], sc30, mix, horizon=3)
    assert len(out) == 3 and all(v.kind == "ook" for v in out)
    np.testing.assert_array_equal(out[0].values, sc30.P @ mix.m)
    # the tail in interval 1 is the pulse evaluated one symbol later
    t = np.arange(sc30.L) * sc30.dt + sc30.params.T
    expected = sum(
        mix.m[i] * pm.cir_eval(t, D, sc30.params) for i, D in enumerate(sc30.particles.D)
    )
    np.testing.assert_allclose(out[1].values, expected, rtol=1e-12)


def test_ook_time_invariance(sc30):
    mix = pm.Mixture(m=np.array([2e5, 1e4]))
    a = pm.ook_signal([1, 0], sc30, mix, horizon=2)
    b = pm.ook_signal([0, 1, 0], sc30, mix, horizon=3)
    np.testing.assert_array_equal(b[1].values, a[0].values)
    np.testing.assert_allclose(b[2].values, a[1].values, rtol=1e-12)


def test_ook_superposition(sc30):
    mix = pm.Mixture(m=np.array([5e4, 5e4]))
    both = pm.ook_signal([1, 1, 0], sc30, mix, horizon=3)
    first = pm.ook_signal([1, 0, 0], sc30, mix, horizon=3)
    second = pm.ook_signal([0, 1, 0], sc30, mix, horizon=3)
    for j in range(3):
        np.testing.assert_allclose(
            both[j].values, first[j].values + second[j].values, rtol=1e-12, atol=1e-30
        )


def test_ook_all_on_approaches_worst_case(sc30):
    # with K past on-symbols the received signal in the current interval is
    # the pulse plus a partial interference sum, which the worst-case
    # interference shape bounds from above and approaches from below
    K = 1000
    mix = pm.Mixture(m=np.array([1e5, 1e5]))
    out = pm.ook_signal([1] * (K + 1), sc30, mix, horizon=K + 1)
    last = out[K].values
    own = sc30.P @ mix.m
    isi_full = sc30.P_r @ mix.m
    tail_sum = last - own
    assert np.all(tail_sum <= isi_full * (1.0 + 1e-12))
    T = sc30.params.T
    t = np.arange(sc30.L) * sc30.dt
    bound = sum(
        mix.m[i] * 2.0 * sc30.params.V / (4.0 * math.pi * D) ** 1.5 / (T * np.sqrt(t + K * T))
        for i, D in enumerate(sc30.particles.D)
    )
    assert np.all(isi_full - tail_sum <= bound)


def test_ook_rejects_bad_symbols(sc30):
    mix = pm.Mixture(m=np.array([1.0, 1.0]))
    with pytest.raises(ValueError):
        pm.ook_signal([0, 2], sc30, mix, horizon=2)
    with pytest.raises(ValueError):
        pm.ook_signal([1], sc30, mix, horizon=0)
