"""Virtual sensing: rebuild hidden channels from a sparse subset.

Modal amplitudes are re-estimated from the live channels over a short
calibration window, then the modes are propagated open loop for a fixed
horizon before the next re-calibration.
"""

import csv
import warnings
from dataclasses import asdict, dataclass

import numpy as np

from . import metrics
from .errors import (ConfigError, ConstantTruth, EmptyMask, HorizonExceedsData, ModelDataMismatch,
                     UnderdeterminedCalibration, ZeroRange)
from .koopman import pinv, vandermonde
from .preprocessing import zscore_invert


class UnderdeterminedWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SensorMask:
    """Live channel indices out of `p_total`."""

    p_total: int
    available: tuple

    def __post_init__(self):
        avail = tuple(sorted({int(i) for i in self.available}))
        if not avail:
            raise EmptyMask("at least one sensor must be available")
        if avail[0] < 0 or avail[-1] >= self.p_total:
            raise EmptyMask(f"sensor indices must lie in [0, {self.p_total})")
        object.__setattr__(self, "available", avail)

    @classmethod
    def from_hidden(cls, p_total, hidden):
        hidden = {int(i) for i in hidden}
        return cls(p_total, tuple(i for i in range(p_total) if i not in hidden))

    @property
    def q(self):
        return len(self.available)

    @property
    def hidden(self):
        live = set(self.available)
        return tuple(i for i in range(self.p_total) if i not in live)

    @property
    def hidden_flags(self):
        flags = np.ones(self.p_total, dtype=bool)
        flags[list(self.available)] = False
        return flags


@dataclass(frozen=True)
class RollingConfig:
    """Rolling-horizon settings.

    Parameters
    ----------
    horizon_w : int
        Samples propagated per window.
    calibration_len : int, optional
        Samples of history used per calibration; defaults to the model's
        delay depth.
    denormalize : bool
        Report the reconstruction in physical units.
    alignment : {'causal', 'lookahead'}
        ``'causal'`` calibrates on the samples ending at the window start;
        ``'lookahead'`` on the samples starting there.
    allow_underdetermined : bool
        Warn instead of raising when a full-length calibration has fewer
        equations than modes.
    score_from : int, optional
        First sample included in the R^2 / NRMSE scores. By default, with
        causal alignment, scoring starts at the first window calibrated on a
        full-length history; warm-up windows are still reconstructed and
        exported.
    """

    horizon_w: int
    calibration_len: int = None
    denormalize: bool = False
    alignment: str = "causal"
    allow_underdetermined: bool = False
    score_from: int = None

    def __post_init__(self):
        if self.horizon_w < 1:
            raise ConfigError(f"horizon_w must be >= 1, got {self.horizon_w}")
        if self.calibration_len is not None and self.calibration_len < 1:
            raise ConfigError(f"calibration_len must be >= 1, got {self.calibration_len}")
        if self.alignment not in ("causal", "lookahead"):
            raise ConfigError(f"unknown alignment {self.alignment!r}")
        if self.score_from is not None and self.score_from < 0:
            raise ConfigError(f"score_from must be >= 0, got {self.score_from}")


@dataclass
class ReconstructionReport:
    y_hat: object
    r2: np.ndarray
    nrmse: np.ndarray
    mask: SensorMask
    config: RollingConfig
    score_from: int = 0

    @property
    def hidden(self):
        return self.mask.hidden_flags

    def per_channel(self):
        """Metrics rows ``{name, hidden, r2, nrmse}`` in channel order."""
        rows = []
        for i, name in enumerate(self.y_hat.channel_names):
            rows.append({
                "name": name,
                "hidden": bool(self.hidden[i]),
                "r2": _json_float(self.r2[i]),
                "nrmse": _json_float(self.nrmse[i]),
            })
        return rows

    def hidden_r2(self):
        return self.r2[self.hidden]


def _json_float(x):
    x = float(x)
    return x if np.isfinite(x) else None


def _check_mask(model, mask):
    if mask.p_total != model.p:
        raise ModelDataMismatch(f"mask covers {mask.p_total} channels, model has {model.p}")


def sparse_basis(model, mask, calibration_len):
    """Block-Vandermonde design for the live channels.

    Block ``t`` (rows ``t*q`` to ``(t+1)*q``) is
    ``phi_phys[available] * mu**t``.
    """
    _check_mask(model, mask)
    if calibration_len < 1:
        raise ConfigError(f"calibration_len must be >= 1, got {calibration_len}")
    phi = model.phi_phys[list(mask.available)]
    powers = vandermonde(model.mu, calibration_len)
    return (phi[None, :, :] * powers.T[:, None, :]).reshape(calibration_len * mask.q, model.r)


def _solve(basis_pinv, basis, window):
    target = np.asarray(window, dtype=float).T.reshape(-1)
    b = basis_pinv @ target
    residual = float(np.linalg.norm(basis @ b - target))
    return b, residual


def calibrate(model, mask, observed_window, allow_underdetermined=False):
    """Least-squares modal amplitudes from a window of live channels.

    Parameters
    ----------
    observed_window : ndarray, shape (q, L)
        Normalized samples, one column per time step.

    Returns
    -------
    b : ndarray of complex, shape (r,)
        Amplitudes referenced to the first column of the window.
    residual : float
        Euclidean norm of the fit residual.
    """
    window = np.atleast_2d(np.asarray(observed_window, dtype=float))
    if window.shape[0] != mask.q:
        raise ModelDataMismatch(f"window has {window.shape[0]} rows, mask has {mask.q} live sensors")
    n_cal = window.shape[1]
    if mask.q * n_cal < model.r:
        msg = f"{mask.q} sensors x {n_cal} samples < rank {model.r}"
        if not allow_underdetermined:
            raise UnderdeterminedCalibration(msg)
        warnings.warn(msg, UnderdeterminedWarning, stacklevel=2)
    basis = sparse_basis(model, mask, n_cal)
    return _solve(pinv(basis), basis, window)


def propagate(model, b_k, horizon_w):
    """``Re(phi_phys diag(b_k) V_W)`` over `horizon_w` steps."""
    b_k = np.asarray(b_k, dtype=complex)
    return (model.phi_phys @ (b_k[:, None] * vandermonde(model.mu, horizon_w))).real


def rolling_reconstruct(model, mask, test_data, config):
    """Alternate calibration and open-loop propagation over `test_data`.

    `test_data` must already be filtered and normalized with the model's
    stored settings. Windows advance by ``horizon_w`` with no overlap; the
    last one is truncated at the end of the data.

    Returns
    -------
    ReconstructionReport
        Metrics are evaluated against `test_data` for every channel; the
        report flags which channels were hidden.
    """
    _check_mask(model, mask)
    if test_data.p != model.p:
        raise ModelDataMismatch(f"test data has {test_data.p} channels, model has {model.p}")
    n = test_data.n_samples
    w = int(config.horizon_w)
    n_cal = int(config.calibration_len or model.d)
    if n < n_cal + w:
        raise HorizonExceedsData(f"{n} samples cannot hold calibration {n_cal} + horizon {w}")

    live = test_data.values[list(mask.available)]
    y_hat = np.empty((model.p, n))
    cache = {}
    k = 0
    while k < n:
        if config.alignment == "causal":
            length = min(n_cal, k + 1)
            window = live[:, k - length + 1:k + 1]
            shift = length - 1
        else:
            length = min(n_cal, n - k)
            window = live[:, k:k + length]
            shift = 0
        if mask.q * length < model.r:
            msg = f"{mask.q} sensors x {length} samples < rank {model.r} at sample {k}"
            if length == n_cal and not config.allow_underdetermined:
                raise UnderdeterminedCalibration(msg)
            warnings.warn(msg, UnderdeterminedWarning, stacklevel=2)
        if length not in cache:
            basis = sparse_basis(model, mask, length)
            cache[length] = (pinv(basis), basis)
        b, _ = _solve(*cache[length], window)
        b_now = b * model.mu ** shift if shift else b
        span = min(w, n - k)
        y_hat[:, k:k + span] = propagate(model, b_now, span)
        k += w

    score_from = config.score_from
    if score_from is None:
        score_from = -(-(n_cal - 1) // w) * w if config.alignment == "causal" else 0
    if score_from > n - 2:
        raise HorizonExceedsData(f"scoring from sample {score_from} leaves fewer than 2 of {n}")
    r2 = np.full(model.p, np.nan)
    nrmse = np.full(model.p, np.nan)
    for i in range(model.p):
        truth, pred = test_data.values[i, score_from:], y_hat[i, score_from:]
        try:
            r2[i] = metrics.r2(truth, pred)
        except ConstantTruth:
            pass
        try:
            nrmse[i] = metrics.nrmse(truth, pred)
        except ZeroRange:
            pass

    rec = test_data.with_values(y_hat)
    if config.denormalize:
        if model.norm is None:
            raise ConfigError("model carries no normalization parameters to invert")
        rec = zscore_invert(rec, model.norm)
    return ReconstructionReport(y_hat=rec, r2=r2, nrmse=nrmse, mask=mask, config=config,
                                score_from=score_from)


def write_reconstruction_csv(report, path):
    """One column per channel, headed ``<name>_rec``."""
    values = report.y_hat.values
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"{name}_rec" for name in report.y_hat.channel_names])
        for row in values.T:
            writer.writerow([repr(float(v)) for v in row])


def report_json(report):
    return {"config": asdict(report.config), "score_from": report.score_from,
            "per_channel": report.per_channel()}
