import numpy as np
import pytest
from scipy import signal

from koopman_sensing import (FilterSpec, NormalizationParams, TimeSeriesMatrix, bandpass_zero_phase,
                             zscore_apply, zscore_fit, zscore_invert)
from koopman_sensing.errors import (DegenerateChannel, NonFiniteValue, NyquistViolation, ShapeMismatch,
                                    SignalTooShort)

DT = 0.02


def sine(f, n=3000, amp=1.0):
    return amp * np.sin(2 * np.pi * f * np.arange(n) * DT)


def xcorr_peak_lag(a, b):
    c = signal.correlate(a - a.mean(), b - b.mean(), mode="full")
    return int(np.argmax(c)) - (b.size - 1)


def test_in_band_sinusoid_has_no_phase_shift():
    x = sine(1.0)
    y = bandpass_zero_phase(TimeSeriesMatrix(x, DT)).values[0]
    assert xcorr_peak_lag(y, x) == 0


def test_constant_channel_is_removed():
    x = TimeSeriesMatrix(np.full(3000, 5.0), DT)
    y = bandpass_zero_phase(x).values[0]
    assert np.max(np.abs(y[500:-500])) < 1e-6 * 5.0


def test_out_of_band_tone_attenuated_40db():
    x = sine(0.5, n=5000) + sine(20.0, n=5000)
    y = bandpass_zero_phase(TimeSeriesMatrix(x, DT)).values[0]
    spec = np.abs(np.fft.rfft(y * np.hanning(y.size)))
    freqs = np.fft.rfftfreq(y.size, DT)
    low = spec[np.argmin(np.abs(freqs - 0.5))]
    high = spec[np.argmin(np.abs(freqs - 20.0))]
    assert 20 * np.log10(low / high) >= 40
    # the squared Butterworth magnitude at 20 Hz is the analytic bound
    _, h = signal.sosfreqz(FilterSpec().sos(DT), worN=[20.0], fs=1 / DT)
    assert 20 * np.log10(np.abs(h[0]) ** 2) < -40


def test_filter_preserves_shape_and_metadata():
    x = TimeSeriesMatrix(np.random.default_rng(0).standard_normal((3, 500)), DT,
                         channel_names=["a", "b", "c"])
    y = bandpass_zero_phase(x)
    assert y.values.shape == x.values.shape and y.dt == x.dt
    assert y.channel_names == ["a", "b", "c"]


def test_causal_filter_differs_from_zero_phase():
    x = TimeSeriesMatrix(sine(1.0), DT)
    causal = bandpass_zero_phase(x, FilterSpec(zero_phase=False)).values[0]
    zero = bandpass_zero_phase(x).values[0]
    assert np.max(np.abs(causal[500:] - zero[500:])) > 0.01


def test_nyquist_violation():
    with pytest.raises(NyquistViolation):
        bandpass_zero_phase(TimeSeriesMatrix(sine(1.0), 0.1), FilterSpec(high_hz=5.0))


def test_too_short_for_padding():
    with pytest.raises(SignalTooShort):
        bandpass_zero_phase(TimeSeriesMatrix(np.arange(20.0), DT))


def test_zscore_hand_values():
    params = zscore_fit(TimeSeriesMatrix([1.0, 2.0, 3.0], 1.0))
    assert params.means[0] == pytest.approx(2.0)
    assert params.stds[0] == pytest.approx(0.816496580927726)
    z = zscore_apply(TimeSeriesMatrix([1.0, 2.0, 3.0], 1.0), params).values[0]
    np.testing.assert_allclose(z, [-1.224744871391589, 0.0, 1.224744871391589], atol=1e-12)
    back = zscore_invert(TimeSeriesMatrix(z, 1.0), params).values[0]
    np.testing.assert_allclose(back, [1, 2, 3], rtol=1e-12)


def test_zscore_symmetric_pair():
    params = zscore_fit(TimeSeriesMatrix([-1.0, 1.0], 1.0))
    assert params.means[0] == 0.0 and params.stds[0] == 1.0


def test_zscore_degenerate_channel():
    with pytest.raises(DegenerateChannel) as err:
        zscore_fit(TimeSeriesMatrix(np.vstack([np.arange(5.0), np.full(5, 3.0)]), 1.0))
    assert err.value.channel == 1


def test_identity_and_invert_cases():
    x = TimeSeriesMatrix(np.random.default_rng(1).standard_normal((2, 10)), 1.0)
    ident = NormalizationParams(np.zeros(2), np.ones(2))
    np.testing.assert_array_equal(zscore_apply(x, ident).values, x.values)
    np.testing.assert_array_equal(zscore_invert(x, ident).values, x.values)
    zeros = TimeSeriesMatrix(np.zeros(4), 1.0)
    np.testing.assert_array_equal(
        zscore_invert(zeros, NormalizationParams([5.0], [2.0])).values[0], [5, 5, 5, 5])


def test_standardized_moments():
    x = TimeSeriesMatrix(np.random.default_rng(2).normal(3, 7, (4, 1000)), 1.0)
    z = zscore_apply(x, zscore_fit(x)).values
    assert np.all(np.abs(z.mean(axis=1)) < 1e-10)
    assert np.all(np.abs(z.std(axis=1) - 1) < 1e-10)


def test_zscore_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        zscore_apply(TimeSeriesMatrix(np.zeros((2, 5)), 1.0), NormalizationParams([0.0], [1.0]))


def test_non_finite_input_rejected():
    with pytest.raises(NonFiniteValue):
        TimeSeriesMatrix([1.0, np.nan, 2.0], 1.0)
