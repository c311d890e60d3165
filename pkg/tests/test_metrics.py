import numpy as np
import pytest

from koopman_sensing import lyapunov_max, mac, match_modes, nrmse, r2
from koopman_sensing.errors import (ConstantTruth, InsufficientData, SensorCountMismatch, ZeroRange,
                                    ZeroVector)
from koopman_sensing.metrics import delay_embed, first_zero_crossing, mac_matrix


def test_mac_hand_values():
    assert mac([1, 0], [1, 0]) == 1.0
    assert mac([1, 0], [0, 1]) == 0.0
    assert mac([1, 1], [1, 0]) == pytest.approx(0.5)
    with pytest.raises(ZeroVector):
        mac([0, 0], [1, 0])


def test_mac_matrix_matches_pairwise(rng):
    a = rng.standard_normal((5, 3)) + 1j * rng.standard_normal((5, 3))
    b = rng.standard_normal((5, 2))
    table = mac_matrix(a, b)
    for i in range(3):
        for j in range(2):
            assert table[i, j] == pytest.approx(mac(a[:, i], b[:, j]), abs=1e-14)
    with pytest.raises(SensorCountMismatch):
        mac_matrix(a, b[:4])


def test_r2_hand_values():
    t = np.array([0.0, 1, 2])
    assert r2(t, t) == 1.0
    assert r2(t, np.full(3, t.mean())) == 0.0
    assert r2(t, [0, 1, 1]) == pytest.approx(0.5)
    assert r2(t, [5, 5, 5]) < 0
    with pytest.raises(ConstantTruth):
        r2([1, 1, 1], [1, 2, 3])


def test_nrmse_hand_values():
    assert nrmse([0, 1, 2], [0, 1, 2]) == 0.0
    assert nrmse([0, 2], [1, 1]) == pytest.approx(0.5)
    with pytest.raises(ZeroRange):
        nrmse([3, 3], [1, 2])


def test_match_identical_sets(rng):
    shapes = rng.standard_normal((6, 3))
    res = match_modes([0.5, 1.0, 2.0], shapes, [0.5, 1.0, 2.0], shapes)
    assert [(i, j) for i, j, _, _ in res.pairs] == [(0, 0), (1, 1), (2, 2)]
    assert all(m == pytest.approx(1.0) and e == 0 for _, _, m, e in res.pairs)
    assert not res.unmatched_identified and not res.unmatched_reference


def test_extra_reference_mode_is_unmatched(rng):
    shapes = rng.standard_normal((6, 3))
    res = match_modes([0.5, 1.0], shapes[:, :2], [0.5, 1.0, 2.0], shapes)
    assert res.unmatched_reference == [2]


def test_match_respects_frequency_gate(rng):
    shapes = rng.standard_normal((4, 1))
    res = match_modes([1.0], shapes, [2.0], shapes, gate=0.1)
    assert res.pairs == [] and res.unmatched_reference == [0]
    with pytest.raises(SensorCountMismatch):
        match_modes([1.0], shapes, [1.0], shapes[:3])


def test_delay_embedding_and_lag():
    emb = delay_embed(np.arange(10.0), 3, 2)
    np.testing.assert_array_equal(emb[0], [0, 2, 4])
    assert emb.shape == (6, 3)
    x = np.sin(2 * np.pi * np.arange(1000) / 100)
    assert abs(first_zero_crossing(x) - 25) <= 1


def test_sinusoid_is_flagged():
    x = np.sin(2 * np.pi * 0.5 * np.arange(5000) * 0.02)
    est = lyapunov_max(x, 0.02, embed_dim=5)
    assert est.non_positive_slope
    assert est.lyapunov_time == float("inf")


def test_short_signal_rejected():
    with pytest.raises(InsufficientData):
        lyapunov_max(np.sin(np.arange(30)), 0.1, embed_dim=5, embed_lag=5)
