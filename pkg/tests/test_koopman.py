import numpy as np
import pytest

from koopman_sensing import (TimeSeriesMatrix, build_hankel, classify_stability, continuous_spectrum,
                             fit, load_model, reconstruct, save_model, select_rank, temporal_dynamics)
from koopman_sensing import koopman
from koopman_sensing.errors import (ConjugateImbalance, EmptySpectrum, RankCrossesNullspace,
                                    RankTooLarge)
from koopman_sensing.metrics import r2
from koopman_sensing.preprocessing import FilterSpec, NormalizationParams

from conftest import damped_pair_signal, linear_system_signal


def hand_model(mu, phi, b0, dt=0.1):
    mu = np.asarray(mu, dtype=complex)
    r = mu.size
    phi = np.asarray(phi, dtype=complex)
    return koopman.KoopmanModel(
        r=r, u_r=np.eye(phi.shape[0], r), sigma_r=np.ones(r), v_r=np.eye(3, r),
        a_tilde=np.diag(mu), mu=mu, lambda_c=np.log(mu) / dt, w=np.eye(r, dtype=complex),
        phi_aug=phi, b0=np.asarray(b0, dtype=complex), dt=dt, p=phi.shape[0], d=1)


def test_single_damped_sinusoid():
    dt = 0.02
    t = np.arange(2000) * dt
    y = np.exp(-0.05 * t) * np.cos(2 * np.pi * 0.5 * t)
    model = fit(build_hankel(TimeSeriesMatrix(y, dt), 50), 2)
    spec = continuous_spectrum(model)
    lam = complex(-0.05, 2 * np.pi * 0.5)
    np.testing.assert_allclose(spec.frequency_hz, 0.5, atol=1e-3)
    np.testing.assert_allclose(spec.damping_ratio, 0.05 / abs(lam), atol=1e-3)


def test_known_linear_map_eigenvalues():
    a = np.array([[0.9, -0.3], [0.2, 0.95]])
    y = np.empty((2, 200))
    y[:, 0] = [1.0, 0.5]
    for k in range(199):
        y[:, k + 1] = a @ y[:, k]
    model = fit(build_hankel(TimeSeriesMatrix(y, 1.0), 2), 2)
    want = np.sort_complex(np.linalg.eigvals(a))
    np.testing.assert_allclose(np.sort_complex(model.mu), want, atol=1e-10)


def test_constant_signal_crosses_nullspace():
    with pytest.raises(RankCrossesNullspace):
        fit(build_hankel(TimeSeriesMatrix(np.ones(100), 1.0), 5), 2)


def test_rank_too_large(two_mode):
    x, _ = two_mode
    with pytest.raises(RankTooLarge):
        fit(build_hankel(x, 3), 13)


def test_spectrum_closed_form():
    mu = np.exp((-0.05 + 2j * np.pi * 0.5) * 0.1)
    spec = continuous_spectrum(hand_model([mu, np.conj(mu)], np.eye(2), [1, 1]))
    np.testing.assert_allclose(spec.frequency_hz, 0.5)
    np.testing.assert_allclose(spec.damping_ratio, 0.015913, atol=1e-6)


def test_dc_and_real_modes():
    spec = continuous_spectrum(hand_model([1.0, 0.8], np.eye(2), [1, 2]))
    by_index = {int(i): k for k, i in enumerate(spec.mode_index)}
    dc = by_index[0]
    assert spec.is_dc[dc] and np.isnan(spec.damping_ratio[dc]) and spec.frequency_hz[dc] == 0
    real = by_index[1]
    assert spec.frequency_hz[real] == 0 and spec.damping_ratio[real] == pytest.approx(1.0)


def test_spectrum_sorted_by_energy_then_frequency():
    mu = np.exp(np.array([-0.1 + 3j, -0.1 + 1j, -0.1 + 2j]) * 0.1)
    spec = continuous_spectrum(hand_model(mu, np.eye(3), [1, 1, 5]))
    assert list(spec.mode_index) == [2, 1, 0]


def test_stability_labels():
    model = hand_model([1.02, 0.9, 0.5], np.eye(3), [10, 9, 0.1])
    assert list(classify_stability(model, 0.05)) == ["rejected", "structural", "rejected"]
    assert list(classify_stability(model, 0.0)) == ["rejected", "structural", "structural"]


def test_reconstruct_first_snapshot_and_full_length():
    x = linear_system_signal()
    h = build_hankel(x, 10)
    model = fit(h, 4)
    first = reconstruct(model, 1).values[:, 0]
    np.testing.assert_allclose(first, x.values[:, 0], atol=1e-8)
    rec = reconstruct(model, x.n_samples).values
    for i in range(x.p):
        assert r2(x.values[i], rec[i]) >= 0.999


def test_deleted_conjugate_partner_is_detected(two_mode):
    x, _ = two_mode
    model = fit(build_hankel(x, 10), 4)
    keep = [j for j in range(4) if j != int(np.argmax(model.mu.imag))]
    broken = hand_model(model.mu[keep], model.phi_phys[:, keep], model.b0[keep], dt=x.dt)
    with pytest.raises(ConjugateImbalance):
        reconstruct(broken, 50)


def test_temporal_dynamics_unmixes_modes():
    x, _ = damped_pair_signal(modes=((0.5, 0.005), (2.0, 0.005)), n=3000)
    model = fit(build_hankel(x, 20), 4)
    rows = temporal_dynamics(model)
    freqs = np.fft.fftfreq(rows.shape[1], x.dt)
    peaks = sorted({round(abs(freqs[np.argmax(np.abs(np.fft.fft(row)))]), 2) for row in rows})
    assert peaks == [0.5, 2.0]


def test_temporal_dynamics_rank_one():
    y = 0.9 ** np.arange(50)
    model = fit(build_hankel(TimeSeriesMatrix(y, 1.0), 3), 1)
    want = model.sigma_r[0] * model.v_r[:, 0] / model.w[0, 0]
    np.testing.assert_allclose(temporal_dynamics(model)[0], want, rtol=1e-12)


def test_select_rank_policies():
    assert select_rank([10, 1, 1e-12], 3, 10, "energy", 0.99) == 1
    assert select_rank(np.linspace(100, 1, 120), 120, 1000, "fixed", 90) == 90
    with pytest.raises(EmptySpectrum):
        select_rank([], 1, 1, "fixed", 1)
    with pytest.raises(RankTooLarge):
        select_rank([3, 2, 1], 3, 5, "fixed", 4)


def test_gavish_donoho_two_pairs(two_mode):
    x, _ = two_mode
    h = build_hankel(x, 10)
    s = np.linalg.svd(h.h1, compute_uv=False)
    assert select_rank(s, *h.shape, policy="gavish_donoho") == 4


def test_similarity_with_regression_operator(two_mode):
    x, _ = two_mode
    h = build_hankel(x, 5)
    model = fit(h, 4)
    full_op = np.asarray(h.h2) @ np.linalg.pinv(np.asarray(h.h1), rcond=1e-10)
    ev = np.linalg.eigvals(full_op)
    ev = ev[np.argsort(-np.abs(ev))[:4]]
    np.testing.assert_allclose(np.sort_complex(model.mu), np.sort_complex(ev), atol=1e-8)


def test_augmented_mode_ladder(two_mode):
    x, _ = two_mode
    h = build_hankel(x, 6)
    model = fit(h, 4)
    blocks = model.phi_aug.reshape(6, x.p, 4)
    for t in range(1, 6):
        np.testing.assert_allclose(blocks[t], blocks[t - 1] * model.mu, atol=1e-6)


def test_phi_phys_is_a_slice(two_mode):
    x, _ = two_mode
    model = fit(build_hankel(x, 6), 4)
    assert np.shares_memory(model.phi_phys, model.phi_aug)


@pytest.mark.parametrize("method", ["lapack", "gram"])
def test_svd_methods_agree(two_mode, method):
    x, _ = two_mode
    h = build_hankel(x, 8)
    ref = fit(h, 4, svd_method="lapack")
    got = fit(h, 4, svd_method=method)
    np.testing.assert_allclose(np.sort_complex(got.mu), np.sort_complex(ref.mu), atol=1e-9)


def test_global_amplitudes_fix_standing_modes(two_mode):
    # real shapes make a single snapshot ambiguous; the trajectory fit is not
    x, _ = two_mode
    h = build_hankel(x, 8)
    model = fit(h, 4, exact_modes=True, fit_amplitudes_global=True)
    rec = reconstruct(model, x.n_samples).values
    assert min(r2(x.values[i], rec[i]) for i in range(x.p)) >= 0.999


def test_model_round_trip_is_bit_exact(tmp_path, two_mode):
    x, _ = two_mode
    model = fit(build_hankel(x, 8), 4)
    model.norm = NormalizationParams(np.arange(4.0), np.arange(1.0, 5.0))
    model.filter = FilterSpec()
    model.channel_names = ["a", "b", "c", "d"]
    path = tmp_path / "m.npz"
    save_model(model, path)
    back = load_model(path)
    for name in ("mu", "lambda_c", "phi_aug", "b0", "u_r", "sigma_r", "v_r", "w", "a_tilde"):
        np.testing.assert_array_equal(getattr(back, name), getattr(model, name))
    assert (back.p, back.d, back.r, back.dt) == (model.p, model.d, model.r, model.dt)
    assert back.filter == model.filter and back.channel_names == model.channel_names
    np.testing.assert_array_equal(back.norm.stds, model.norm.stds)
    save_model(back, tmp_path / "again.npz")
    assert path.read_bytes() == (tmp_path / "again.npz").read_bytes()
