"""Validation metrics: MAC, R^2, NRMSE, mode matching and Lyapunov exponents."""

from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import (ConfigError, ConstantTruth, InsufficientData, SensorCountMismatch, ShapeMismatch,
                     ZeroRange, ZeroVector)


def mac(a, b):
    """Modal assurance criterion ``|a^H b|^2 / ((a^H a)(b^H b))``.

    Examples
    --------
    >>> mac([1, 1], [1, 0])
    0.5
    """
    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    if a.size != b.size or a.size == 0:
        raise ShapeMismatch(f"vectors of length {a.size} and {b.size}")
    aa = np.vdot(a, a).real
    bb = np.vdot(b, b).real
    if aa == 0 or bb == 0:
        raise ZeroVector("MAC of a zero vector is undefined")
    return float(min(abs(np.vdot(a, b)) ** 2 / (aa * bb), 1.0))


def mac_matrix(phi_a, phi_b):
    """MAC between every column of `phi_a` and every column of `phi_b`."""
    phi_a = np.atleast_2d(np.asarray(phi_a, dtype=complex))
    phi_b = np.atleast_2d(np.asarray(phi_b, dtype=complex))
    if phi_a.shape[0] != phi_b.shape[0]:
        raise SensorCountMismatch(f"{phi_a.shape[0]} vs {phi_b.shape[0]} sensor rows")
    num = np.abs(phi_a.conj().T @ phi_b) ** 2
    den = np.outer(np.sum(np.abs(phi_a) ** 2, axis=0), np.sum(np.abs(phi_b) ** 2, axis=0))
    if np.any(den == 0):
        raise ZeroVector("MAC of a zero vector is undefined")
    return np.minimum(num / den, 1.0)


def _pair(truth, pred):
    truth = np.asarray(truth, dtype=float).ravel()
    pred = np.asarray(pred, dtype=float).ravel()
    if truth.shape != pred.shape:
        raise ShapeMismatch(f"lengths {truth.size} and {pred.size} differ")
    return truth, pred


def r2(truth, pred):
    """Coefficient of determination; negative when worse than the mean."""
    truth, pred = _pair(truth, pred)
    if truth.size < 2:
        raise ShapeMismatch("R^2 needs at least two samples")
    sst = np.sum((truth - truth.mean()) ** 2)
    if sst == 0:
        raise ConstantTruth("truth has zero variance")
    return float(1.0 - np.sum((truth - pred) ** 2) / sst)


def nrmse(truth, pred):
    """Root-mean-square error divided by the range of `truth`."""
    truth, pred = _pair(truth, pred)
    span = truth.max() - truth.min() if truth.size else 0.0
    if span == 0:
        raise ZeroRange("truth has zero range")
    return float(np.sqrt(np.mean((truth - pred) ** 2)) / span)


@dataclass(frozen=True)
class ModeMatchResult:
    """Assignment of identified modes to reference modes.

    ``pairs`` holds ``(identified, reference, mac, frequency_error)`` tuples
    with the relative frequency error.
    """

    pairs: list
    unmatched_identified: list
    unmatched_reference: list


def match_modes(identified_freqs, identified_shapes, reference_freqs, reference_shapes, gate=0.5):
    """Greedy MAC-ranked assignment under a relative frequency gate.

    Parameters
    ----------
    identified_freqs : array_like, shape (n_id,)
    identified_shapes : array_like, shape (p, n_id)
    reference_freqs : array_like, shape (n_ref,)
    reference_shapes : array_like, shape (p, n_ref)
    gate : float
        Maximum ``|f_id - f_ref| / f_ref`` for a pair to be admissible.

    Returns
    -------
    ModeMatchResult
    """
    f_id = np.asarray(identified_freqs, dtype=float).ravel()
    f_ref = np.asarray(reference_freqs, dtype=float).ravel()
    shapes_id = np.asarray(identified_shapes)
    shapes_ref = np.asarray(reference_shapes)
    if shapes_id.ndim == 1:
        shapes_id = shapes_id[:, None]
    if shapes_ref.ndim == 1:
        shapes_ref = shapes_ref[:, None]
    if shapes_id.shape[0] != shapes_ref.shape[0]:
        raise SensorCountMismatch(
            f"identified shapes have {shapes_id.shape[0]} sensors, reference {shapes_ref.shape[0]}")
    if shapes_id.shape[1] != f_id.size or shapes_ref.shape[1] != f_ref.size:
        raise ShapeMismatch("shape columns and frequency lists differ in length")

    table = mac_matrix(shapes_id, shapes_ref)
    with np.errstate(divide="ignore", invalid="ignore"):
        ferr = np.abs(f_id[:, None] - f_ref[None, :]) / np.abs(f_ref[None, :])
    ferr = np.where(f_ref[None, :] == 0, np.where(f_id[:, None] == 0, 0.0, np.inf), ferr)
    candidates = [(-table[i, j], ferr[i, j], i, j)
                  for i in range(f_id.size) for j in range(f_ref.size) if ferr[i, j] <= gate]
    candidates.sort()
    used_id, used_ref, pairs = set(), set(), []
    for neg_mac, err, i, j in candidates:
        if i in used_id or j in used_ref:
            continue
        used_id.add(i)
        used_ref.add(j)
        pairs.append((i, j, float(-neg_mac), float(err)))
    pairs.sort(key=lambda t: t[1])
    return ModeMatchResult(
        pairs=pairs,
        unmatched_identified=[i for i in range(f_id.size) if i not in used_id],
        unmatched_reference=[j for j in range(f_ref.size) if j not in used_ref],
    )


# -- Lyapunov exponent -----------------------------------------------------

RESOLUTION_FLOOR = 1e-8
MIN_LOG_RISE = 1e-6


@dataclass(frozen=True)
class LyapunovEstimate:
    lambda_max: float
    lyapunov_time: float
    fit_range: tuple
    divergence: np.ndarray
    non_positive_slope: bool
    embed_dim: int
    embed_lag: int
    theiler: int


def first_zero_crossing(x):
    """Lag (samples) where the autocorrelation first drops to zero or below."""
    x = np.asarray(x, dtype=float) - np.mean(x)
    n = x.size
    spec = np.fft.rfft(x, 2 * n)
    acf = np.fft.irfft(spec * spec.conj())[:n]
    if acf[0] <= 0:
        return 1
    below = np.flatnonzero(acf <= 0)
    return int(below[0]) if below.size else n


def mean_period(x):
    """Reciprocal of the power-weighted mean frequency, in samples."""
    x = np.asarray(x, dtype=float) - np.mean(x)
    power = np.abs(np.fft.rfft(x)) ** 2
    freqs = np.fft.rfftfreq(x.size)
    power[0] = 0.0
    total = power.sum()
    if total == 0:
        return 1
    fbar = np.sum(freqs * power) / total
    return int(max(round(1.0 / fbar), 1)) if fbar > 0 else x.size


def delay_embed(x, dim, lag):
    x = np.asarray(x, dtype=float)
    n = x.size - (dim - 1) * lag
    if n <= 0:
        raise InsufficientData(f"{x.size} samples too short for dim {dim} and lag {lag}")
    idx = np.arange(n)[:, None] + lag * np.arange(dim)[None, :]
    return x[idx]


def lyapunov_max(signal, dt, embed_dim=10, embed_lag=None, theiler=None, fit_window=None,
                 horizon=None):
    """Largest Lyapunov exponent from nearest-neighbour divergence.

    The scalar signal is delay-embedded; every reference point is paired with
    its nearest neighbour outside a temporal exclusion window and the mean log
    separation of the pairs is tracked forward in time. The exponent is the
    least-squares slope of that curve over `fit_window`, divided by `dt`.

    Parameters
    ----------
    signal : array_like
    dt : float
        Sampling interval (s).
    embed_dim : int
    embed_lag : int, optional
        Defaults to the first zero crossing of the autocorrelation.
    theiler : int, optional
        Exclusion half-width in samples; defaults to one mean period.
    fit_window : (int, int), optional
        Half-open step range of the divergence curve used for the slope.
        Defaults to the rise from the start of the curve up to the point
        where it first covers 70% of its total climb.
    horizon : int, optional
        Steps of divergence to track; defaults to four mean periods.

    Returns
    -------
    LyapunovEstimate
        ``non_positive_slope`` is set (not raised) when the fitted line
        rises by no more than 1e-6 in log separation over the fit window;
        ``lambda_max`` is then the raw slope and ``lyapunov_time`` is
        infinite. Separations are clamped at ``1e-8 * std * sqrt(dim)``.
    """
    x = np.asarray(signal, dtype=float).ravel()
    if not np.all(np.isfinite(x)):
        raise InsufficientData("signal contains non-finite samples")
    if x.size < 10 or np.ptp(x) == 0:
        raise InsufficientData("signal is too short or constant")
    lag = int(embed_lag) if embed_lag is not None else first_zero_crossing(x)
    period = mean_period(x)
    theiler = int(theiler) if theiler is not None else period
    horizon = int(horizon) if horizon is not None else 4 * period
    if embed_dim < 1 or lag < 1 or theiler < 0 or horizon < 2:
        raise ConfigError("embed_dim, embed_lag, horizon must be positive and theiler non-negative")
    emb = delay_embed(x, embed_dim, lag)
    n_ref = emb.shape[0] - horizon + 1
    if n_ref < 2 * theiler + 10:
        raise InsufficientData(
            f"{emb.shape[0]} delay vectors cannot support horizon {horizon} and exclusion {theiler}")

    nn = _backend.nearest_neighbours(emb, n_ref, theiler)
    if np.all(nn < 0):
        raise InsufficientData("no admissible neighbour pairs")
    # separations below this are rounding noise, not trajectory divergence
    floor = RESOLUTION_FLOOR * np.std(x) * np.sqrt(embed_dim)
    curve = _backend.divergence_curve(emb, nn, horizon, floor)

    if fit_window is None:
        fit_window = _default_fit_window(curve)
    start, stop = int(fit_window[0]), int(fit_window[1])
    if not 0 <= start < stop <= horizon or stop - start < 2:
        raise ConfigError(f"fit window {fit_window} must lie inside the curve of length {horizon}")
    steps = np.arange(start, stop)
    seg = curve[start:stop]
    good = np.isfinite(seg)
    if good.sum() < 2:
        raise InsufficientData("divergence curve has too few finite points in the fit window")
    slope = np.polyfit(steps[good], seg[good], 1)[0]
    rise = slope * (steps[good][-1] - steps[good][0])
    flag = not rise > MIN_LOG_RISE
    slope /= dt
    return LyapunovEstimate(
        lambda_max=float(slope),
        lyapunov_time=float(1.0 / slope) if not flag else float("inf"),
        fit_range=(start, stop),
        divergence=curve,
        non_positive_slope=flag,
        embed_dim=int(embed_dim),
        embed_lag=lag,
        theiler=theiler,
    )


def _default_fit_window(curve):
    finite = np.where(np.isfinite(curve), curve, np.nan)
    lo = np.nanmin(finite[: max(2, finite.size // 4)])
    hi = np.nanmax(finite)
    if not hi > lo:
        return (0, curve.size)
    start = int(np.nanargmin(finite[: max(2, finite.size // 4)]))
    above = np.flatnonzero(finite[start:] >= lo + 0.7 * (hi - lo))
    stop = start + (int(above[0]) if above.size else finite.size - start)
    return (start, max(stop, start + 2))
