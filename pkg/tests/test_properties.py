import itertools

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from koopman_sensing import (RollingConfig, SensorMask, TimeSeriesMatrix, build_hankel, fit, mac,
                             rolling_reconstruct, select_rank, zscore_apply, zscore_fit, zscore_invert)
from koopman_sensing.koopman import vandermonde
from koopman_sensing.metrics import r2
from koopman_sensing.sensing import propagate

from conftest import damped_pair_signal, linear_system_signal

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
seeds = st.integers(0, 2 ** 32 - 1)


def test_hankel_shift_identity_exhaustive():
    x = np.random.default_rng(0).standard_normal((3, 20))
    p, d = 3, 4
    h = build_hankel(TimeSeriesMatrix(x, 1.0), d)
    full = h.full
    for j, row in itertools.product(range(full.shape[1] - 1), range(p * (d - 1))):
        assert full[row, j + 1] == full[row + p, j]
    for j, t, i in itertools.product(range(full.shape[1]), range(d), range(p)):
        assert full[t * p + i, j] == x[i, j + t]
    np.testing.assert_array_equal(h.h2[:, :-1], h.h1[:, 1:])


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_conjugate_pair_closure(seed):
    x, _ = damped_pair_signal(p=3, n=300, seed=seed,
                              modes=((0.4, 0.03), (1.1, 0.02), (2.3, 0.05)))
    model = fit(build_hankel(x, 8), 6)
    mu = model.mu
    for j in range(mu.size):
        k = int(np.argmin(np.abs(mu - np.conj(mu[j]))))
        assert abs(mu[k] - np.conj(mu[j])) < 1e-8
        np.testing.assert_allclose(model.phi_phys[:, k], np.conj(model.phi_phys[:, j]), atol=1e-8)


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_exp_log_round_trip(seed):
    x, _ = damped_pair_signal(p=2, n=300, seed=seed)
    model = fit(build_hankel(x, 6), 4)
    np.testing.assert_allclose(np.exp(model.lambda_c * model.dt), model.mu, rtol=0, atol=1e-12)


complex_vec = st.integers(2, 12).flatmap(
    lambda n: st.tuples(arrays(np.float64, n, elements=finite), arrays(np.float64, n, elements=finite)))


@settings(max_examples=100, deadline=None)
@given(complex_vec, complex_vec, finite, finite)
def test_mac_scale_invariance_and_symmetry(a_parts, b_parts, ar, ai):
    n = min(a_parts[0].size, b_parts[0].size)
    a = a_parts[0][:n] + 1j * a_parts[1][:n]
    b = b_parts[0][:n] + 1j * b_parts[1][:n]
    alpha = complex(ar, ai)
    if np.linalg.norm(a) < 1e-3 or np.linalg.norm(b) < 1e-3 or abs(alpha) < 1e-3:
        return
    base = mac(a, b)
    assert 0.0 <= base <= 1.0
    assert abs(mac(alpha * a, b) - base) <= 1e-12
    assert abs(mac(b, a) - base) <= 1e-12


def test_mac_hand_values():
    assert mac([1, 0], [1, 0]) == 1.0
    assert mac([1, 0], [0, 1]) == 0.0
    assert abs(mac([1, 1], [1, 0]) - 0.5) < 1e-15


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, 6, elements=st.floats(-1, 1)), arrays(np.float64, 6, elements=st.floats(-1, 1)),
       st.integers(1, 500))
def test_vandermonde_matches_recursion(re, im, w):
    mu = (re + 1j * im) / np.maximum(1.0, np.abs(re + 1j * im))
    v = vandermonde(mu, w)
    state = np.ones_like(mu)
    for t in range(w):
        assert np.max(np.abs(v[:, t] - state)) <= 1e-12
        state = state * mu


@settings(max_examples=20, deadline=None)
@given(seeds, st.integers(1, 400))
def test_propagate_matches_recursion(seed, w):
    x = linear_system_signal(p=4, n=200, seed=seed % 1000)
    model = fit(build_hankel(x, 6), 4)
    rng = np.random.default_rng(seed)
    b = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    out = propagate(model, b, w)
    state = b.copy()
    for t in range(w):
        assert np.max(np.abs(out[:, t] - (model.phi_phys @ state).real)) <= 1e-12
        state = state * model.mu


@settings(max_examples=15, deadline=None)
@given(seeds)
def test_full_mask_degeneracy(seed):
    x = linear_system_signal(p=5, n=400, seed=seed % 10000)
    model = fit(build_hankel(x, 8), 4)
    rep = rolling_reconstruct(model, SensorMask(5, range(5)), x,
                              RollingConfig(horizon_w=1, calibration_len=model.d))
    assert np.all(rep.r2 >= 0.999)


@settings(max_examples=100, deadline=None)
@given(arrays(np.float64, (3, 20), elements=st.floats(-1e6, 1e6)))
def test_zscore_round_trip(values):
    x = TimeSeriesMatrix(values, 1.0)
    try:
        params = zscore_fit(x)
    except Exception:
        return  # constant channels are rejected by design
    back = zscore_invert(zscore_apply(x, params), params).values
    scale = np.maximum(np.abs(values), params.stds[:, None])
    assert np.all(np.abs(back - values) <= 1e-12 * np.maximum(scale, 1.0))


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_gavish_donoho_two_pairs(seed):
    x, _ = damped_pair_signal(p=4, n=500, seed=seed)
    h = build_hankel(x, 10)
    s = np.linalg.svd(np.asarray(h.h1), compute_uv=False)
    assert select_rank(s, *h.shape, policy="gavish_donoho") == 4


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, 30, elements=finite), st.floats(1e-9, 1e-3))
def test_r2_bounded_and_continuous(truth, eps):
    if np.ptp(truth) < 1e-3:
        return
    assert r2(truth, truth[::-1]) <= 1.0
    assert r2(truth, truth + eps) > 1 - 1e-3
