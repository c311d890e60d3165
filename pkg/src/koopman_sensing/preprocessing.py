"""Signal conditioning: zero-phase Butterworth bandpass and z-score scaling."""

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import signal

from .errors import (DegenerateChannel, NonFiniteValue, NyquistViolation, ShapeMismatch,
                     SignalTooShort)


@dataclass(frozen=True)
class TimeSeriesMatrix:
    """Uniformly sampled multichannel real signal.

    Parameters
    ----------
    values : ndarray, shape (p, N)
        One row per channel.
    dt : float
        Sampling interval in seconds.
    channel_names, channel_units : list of str, optional
        Per-channel labels; generated when omitted.
    """

    values: np.ndarray
    dt: float
    channel_names: list = field(default=None)
    channel_units: list = field(default=None)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[np.newaxis, :]
        if values.ndim != 2:
            raise ShapeMismatch(f"expected a 2-D (channels x samples) array, got ndim={values.ndim}")
        p, n = values.shape
        if p < 1 or n < 1:
            raise ShapeMismatch(f"need at least 1 channel and 1 sample, got {values.shape}")
        if not np.isfinite(self.dt) or self.dt <= 0:
            raise ShapeMismatch(f"dt must be positive, got {self.dt}")
        if not np.all(np.isfinite(values)):
            row, col = np.argwhere(~np.isfinite(values))[0]
            raise NonFiniteValue(int(col), int(row))
        names = list(self.channel_names) if self.channel_names is not None else [f"ch{i}" for i in range(p)]
        units = list(self.channel_units) if self.channel_units is not None else [""] * p
        if len(names) != p or len(units) != p:
            raise ShapeMismatch("channel metadata length does not match channel count")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "dt", float(self.dt))
        object.__setattr__(self, "channel_names", names)
        object.__setattr__(self, "channel_units", units)

    @property
    def p(self):
        return self.values.shape[0]

    @property
    def n_samples(self):
        return self.values.shape[1]

    def with_values(self, values):
        """Copy of the metadata around new sample values."""
        return replace(self, values=values)


@dataclass(frozen=True)
class NormalizationParams:
    means: np.ndarray
    stds: np.ndarray

    def __post_init__(self):
        means = np.asarray(self.means, dtype=float).ravel()
        stds = np.asarray(self.stds, dtype=float).ravel()
        if means.shape != stds.shape:
            raise ShapeMismatch("means and stds differ in length")
        if np.any(stds <= 0):
            raise ShapeMismatch("standard deviations must be strictly positive")
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "stds", stds)


@dataclass(frozen=True)
class FilterSpec:
    """Butterworth bandpass settings (edges in Hz)."""

    order: int = 4
    low_hz: float = 0.25
    high_hz: float = 5.0
    zero_phase: bool = True

    def validate(self, dt):
        nyquist = 0.5 / dt
        if self.order < 1:
            raise NyquistViolation(f"filter order must be >= 1, got {self.order}")
        if not 0 < self.low_hz < self.high_hz:
            raise NyquistViolation(f"need 0 < low_hz < high_hz, got {self.low_hz}, {self.high_hz}")
        if self.high_hz >= nyquist:
            raise NyquistViolation(f"high_hz={self.high_hz} must be below Nyquist {nyquist}")

    def sos(self, dt):
        self.validate(dt)
        return signal.butter(self.order, [self.low_hz, self.high_hz], btype="bandpass",
                             fs=1.0 / dt, output="sos")

    @property
    def pad_len(self):
        return 3 * (2 * self.order + 1)


def bandpass_zero_phase(x, spec=FilterSpec()):
    """Bandpass every channel of `x`.

    With ``spec.zero_phase`` the second-order-section cascade runs forward
    and backward (squared magnitude, no phase shift) after odd reflection
    padding of ``3 * (2 * order + 1)`` samples per end. Otherwise a single
    causal pass is applied.

    Parameters
    ----------
    x : TimeSeriesMatrix
    spec : FilterSpec

    Returns
    -------
    TimeSeriesMatrix
        Same shape, ``dt`` and metadata as `x`.
    """
    sos = spec.sos(x.dt)
    if x.n_samples <= 9 * spec.order or x.n_samples <= spec.pad_len:
        raise SignalTooShort(f"{x.n_samples} samples is too short for order {spec.order} padding")
    if spec.zero_phase:
        y = signal.sosfiltfilt(sos, x.values, axis=1, padtype="odd", padlen=spec.pad_len)
    else:
        zi = signal.sosfilt_zi(sos)[:, np.newaxis, :] * x.values[:, 0][np.newaxis, :, np.newaxis]
        y, _ = signal.sosfilt(sos, x.values, axis=1, zi=zi)
    return x.with_values(np.ascontiguousarray(y))


def zscore_fit(x):
    """Per-channel mean and population standard deviation.

    Raises
    ------
    DegenerateChannel
        If a channel's std is below ``1e-12 * max(1, |mean|)``.
    """
    means = x.values.mean(axis=1)
    stds = x.values.std(axis=1)
    for i, (m, s) in enumerate(zip(means, stds)):
        if s < 1e-12 * max(1.0, abs(m)):
            raise DegenerateChannel(i, f"channel {i} ({x.channel_names[i]}) is constant")
    return NormalizationParams(means, stds)


def _check(x, params):
    if params.means.size != x.p:
        raise ShapeMismatch(f"normalization has {params.means.size} channels, data has {x.p}")


def zscore_apply(x, params):
    _check(x, params)
    return x.with_values((x.values - params.means[:, None]) / params.stds[:, None])


def zscore_invert(x, params):
    _check(x, params)
    return x.with_values(x.values * params.stds[:, None] + params.means[:, None])
