"""Hankel-DMD identification of a reduced Koopman operator.

The reduced operator is fitted on the delay-embedded trajectory pair
``(h1, h2)``; its spectrum gives discrete multipliers ``mu``, continuous
exponents ``lambda = log(mu) / dt`` and modes whose first ``p`` rows are the
physical mode shapes.
"""

import io
import json
import zipfile
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import (ConfigError, ConjugateImbalance, DataError, EigDecompositionFailure,
                     EmptySpectrum, IllConditionedEigenbasis, RankCrossesNullspace, RankTooLarge,
                     UsageError)
from .preprocessing import FilterSpec, NormalizationParams, TimeSeriesMatrix

FORMAT_VERSION = 1
NULLSPACE_TOL = 1e-14
PINV_RTOL = 1e-10
EIGVEC_COND_MAX = 1e12
UNIT_CIRCLE_TOL = 1e-6
DC_TOL = 1e-12
# Gram-route accuracy limit: below this sigma ratio the squared spectrum is
# dominated by rounding and the LAPACK path is used instead.
GRAM_SIGMA_FLOOR = 1e-6
GRAM_MIN_ELEMENTS = 4_000_000


def _blas_ready(a):
    # the Hankel view has overlapping strides that BLAS cannot consume
    a = np.asarray(a)
    if a.strides[-1] != a.itemsize or a.strides[0] < a.shape[-1] * a.itemsize:
        a = np.ascontiguousarray(a)
    return a


def dense_pair(h):
    """``(h1, h2)`` as BLAS-compatible slices of one dense copy of ``h.full``."""
    full = np.ascontiguousarray(h.full)
    return full[:, :-1], full[:, 1:]


def pinv(a, rtol=PINV_RTOL):
    """SVD pseudoinverse with a relative cutoff on the singular values."""
    u, s, vh = np.linalg.svd(a, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return np.zeros(a.shape[::-1], dtype=np.result_type(a, float))
    keep = s > rtol * s[0]
    return (vh[keep].conj().T / s[keep]) @ u[:, keep].conj().T


def vandermonde(mu, n_steps):
    """Rows of successive powers ``mu_j**t`` for ``t = 0..n_steps-1``.

    Built by cumulative multiplication so every entry is the same rounding
    sequence as stepping the diagonal recursion.
    """
    mu = np.asarray(mu, dtype=complex)
    out = np.empty((mu.size, int(n_steps)), dtype=complex)
    if n_steps == 0:
        return out
    out[:, 0] = 1.0
    for t in range(1, int(n_steps)):
        out[:, t] = out[:, t - 1] * mu
    return out


class HankelSVD:
    """Singular value decomposition of ``h1`` with lazy truncation.

    ``method='lapack'`` runs a thin divide-and-conquer SVD. ``method='gram'``
    eigen-decomposes the row Gram matrix ``h1 h1^T`` and recovers the right
    singular vectors as ``h1^T U / sigma``; that is much cheaper when the
    embedding has far more columns than rows. ``'auto'`` picks Gram for large
    wide matrices.
    """

    def __init__(self, h1, method="auto"):
        rows, cols = h1.shape
        if method == "auto":
            method = "gram" if rows * cols >= GRAM_MIN_ELEMENTS and 4 * rows <= cols else "lapack"
        if method not in ("gram", "lapack"):
            raise ConfigError(f"unknown svd method {method!r}")
        h1 = _blas_ready(h1)
        self.h1 = h1
        self.method = method
        self._v = None
        if method == "lapack":
            u, s, vh = scipy.linalg.svd(np.asarray(h1), full_matrices=False, lapack_driver="gesdd")
            self.u, self.s, self._v = u, s, vh.T
        else:
            w, q = scipy.linalg.eigh(h1 @ h1.T)
            order = np.argsort(w)[::-1]
            self.u = q[:, order]
            self.s = np.sqrt(np.clip(w[order], 0.0, None))

    def truncate(self, r):
        """Leading ``(U_r, sigma_r, V_r)``."""
        if self.method == "gram" and (self.s[r - 1] <= GRAM_SIGMA_FLOOR * self.s[0]):
            exact = HankelSVD(self.h1, method="lapack")
            self.__dict__.update(exact.__dict__)
        u = self.u[:, :r]
        s = self.s[:r]
        if self._v is not None:
            v = self._v[:, :r]
        else:
            with np.errstate(divide="ignore", invalid="ignore"):
                v = (self.h1.T @ u) / s
        return u, s, v


def hankel_svd(h, method="auto"):
    """Decompose ``h.h1`` from a single dense copy of the Hankel matrix."""
    return HankelSVD(dense_pair(h)[0], method=method)


@dataclass
class KoopmanModel:
    """Fitted reduced Koopman operator and its spectral decomposition."""

    r: int
    u_r: np.ndarray
    sigma_r: np.ndarray
    v_r: np.ndarray
    a_tilde: np.ndarray
    mu: np.ndarray
    lambda_c: np.ndarray
    w: np.ndarray
    phi_aug: np.ndarray
    b0: np.ndarray
    dt: float
    p: int
    d: int
    norm: NormalizationParams = None
    filter: FilterSpec = None
    channel_names: list = field(default=None)
    svd_method: str = "auto"

    @property
    def phi_phys(self):
        # a slice of the augmented modes, never a recomputation
        return self.phi_aug[: self.p]


def fit(h, r, svd=None, svd_method="auto", exact_modes=False, fit_amplitudes_global=False):
    """Identify the reduced operator from a Hankel pair.

    Parameters
    ----------
    h : HankelPair
    r : int
        Truncation rank, ``1 <= r <= min(p*d, m-1)``.
    svd : HankelSVD, optional
        Reuse a decomposition already computed for rank selection.
    svd_method : {'auto', 'lapack', 'gram'}
    exact_modes : bool
        Use ``h2 V Sigma^-1 W diag(1/mu)`` instead of the projected ``U W``.
    fit_amplitudes_global : bool
        Fit amplitudes to the whole training trajectory instead of the
        first snapshot.

    Returns
    -------
    KoopmanModel
    """
    rows, cols = h.shape
    r = int(r)
    if r < 1 or r > min(rows, cols):
        raise RankTooLarge(f"rank {r} outside 1..{min(rows, cols)}")
    if svd is None:
        svd = hankel_svd(h, method=svd_method)
    h1 = svd.h1
    full = h1.base if h1.base is not None and h1.base.shape == h.full.shape else None
    h2 = full[:, 1:] if full is not None else _blas_ready(h.h2)
    u, s, v = svd.truncate(r)
    if not s[-1] > NULLSPACE_TOL * s[0]:
        raise RankCrossesNullspace(
            f"sigma_{r} = {s[-1]:.3e} is not above {NULLSPACE_TOL:g} * sigma_1 = {s[0]:.3e}")

    h2v = h2 @ v
    a_tilde = (u.T @ h2v) / s
    mu, w = np.linalg.eig(a_tilde)
    cond = np.linalg.cond(w)
    if not np.isfinite(cond) or cond > EIGVEC_COND_MAX:
        raise EigDecompositionFailure(f"eigenvector matrix condition number {cond:.3e}")
    with np.errstate(divide="ignore", invalid="ignore"):
        lambda_c = np.log(mu.astype(complex)) / h.dt
    if exact_modes:
        phi_aug = (h2v / s) @ w / mu
    else:
        phi_aug = u @ w

    model = KoopmanModel(r=r, u_r=u, sigma_r=s, v_r=v, a_tilde=a_tilde, mu=mu.astype(complex),
                         lambda_c=lambda_c, w=w.astype(complex), phi_aug=phi_aug.astype(complex),
                         b0=None, dt=h.dt, p=h.p, d=h.d, svd_method=svd.method)
    y = np.array(h.h1[: h.p])
    if fit_amplitudes_global:
        model.b0 = _global_amplitudes(model.phi_phys, model.mu, y)
    else:
        model.b0 = pinv(model.phi_phys) @ y[:, 0]
    return model


def _global_amplitudes(phi, mu, y):
    # min ||phi diag(b) V - Y||_F through the normal equations
    # (phi^H phi) o conj(V V^H) b = conj(diag(V Y^H phi))
    v = vandermonde(mu, y.shape[1])
    p_mat = (phi.conj().T @ phi) * np.conj(v @ v.conj().T)
    q = np.conj(np.diag(v @ y.T @ phi))
    return pinv(p_mat) @ q


@dataclass(frozen=True)
class ModalParameterSet:
    """Per-mode physical parameters, sorted by energy (descending).

    ``mode_index`` refers back to the column order in the model.
    ``damping_ratio`` is NaN for modes flagged ``is_dc``.
    """

    mode_index: np.ndarray
    frequency_hz: np.ndarray
    damping_ratio: np.ndarray
    growth_rate: np.ndarray
    discrete_magnitude: np.ndarray
    amplitude: np.ndarray
    energy: np.ndarray
    is_dc: np.ndarray

    def __len__(self):
        return self.mode_index.size


def mode_energy(model):
    """Amplitude-weighted energy ``|b_j| * ||phi_j||`` on the physical rows."""
    return np.abs(model.b0) * np.linalg.norm(model.phi_phys, axis=0)


def modal_parameters(lambda_c):
    """Frequency (Hz), damping ratio and DC flag from continuous exponents."""
    lam = np.asarray(lambda_c, dtype=complex)
    mag = np.abs(lam)
    is_dc = mag < DC_TOL
    freq = np.abs(lam.imag) / (2 * np.pi)
    with np.errstate(divide="ignore", invalid="ignore"):
        zeta = np.where(is_dc, np.nan, -lam.real / np.where(is_dc, 1.0, mag))
    return freq, zeta, is_dc


def continuous_spectrum(model):
    """Modal parameters of every retained mode.

    Modes are ordered by energy descending, ties by ascending frequency.
    """
    freq, zeta, is_dc = modal_parameters(model.lambda_c)
    energy = mode_energy(model)
    order = np.lexsort((freq, -energy))
    return ModalParameterSet(
        mode_index=order,
        frequency_hz=freq[order],
        damping_ratio=zeta[order],
        growth_rate=model.lambda_c.real[order],
        discrete_magnitude=np.abs(model.mu)[order],
        amplitude=np.abs(model.b0)[order],
        energy=energy[order],
        is_dc=is_dc[order],
    )


def classify_stability(model, energy_floor=0.0):
    """Label each mode (model column order) ``'structural'`` or ``'rejected'``.

    A mode is structural when it lies inside the unit circle (to 1e-6) and
    carries at least `energy_floor` of the total energy.
    """
    if not 0 <= energy_floor < 1:
        raise ConfigError(f"energy_floor must be in [0, 1), got {energy_floor}")
    energy = mode_energy(model)
    total = energy.sum()
    share = energy / total if total > 0 else np.zeros_like(energy)
    ok = (np.abs(model.mu) <= 1 + UNIT_CIRCLE_TOL) & (share >= energy_floor)
    return np.where(ok, "structural", "rejected")


def reconstruct(model, k_steps):
    """Modal reconstruction ``Re(sum_j phi_j mu_j^k b_j)`` for ``k < k_steps``.

    Returns
    -------
    TimeSeriesMatrix
        Normalized units, ``p x k_steps``.
    """
    if k_steps < 1:
        raise DataError(f"k_steps must be >= 1, got {k_steps}")
    y = model.phi_phys @ (model.b0[:, None] * vandermonde(model.mu, k_steps))
    scale = np.abs(y.real).max()
    resid = np.abs(y.imag).max()
    if resid > 1e-8 * max(scale, np.finfo(float).tiny):
        raise ConjugateImbalance(f"imaginary residual {resid:.3e} vs signal scale {scale:.3e}")
    return TimeSeriesMatrix(y.real, model.dt, channel_names=model.channel_names)


def temporal_dynamics(model):
    """Per-mode time histories ``W^-1 Sigma_r V_r^T`` of shape ``(r, m-1)``."""
    cond = np.linalg.cond(model.w)
    if not np.isfinite(cond) or cond > EIGVEC_COND_MAX:
        raise IllConditionedEigenbasis(f"eigenvector matrix condition number {cond:.3e}")
    return np.linalg.solve(model.w, model.sigma_r[:, None] * model.v_r.T)


def gavish_donoho_omega(beta):
    return 0.56 * beta ** 3 - 0.95 * beta ** 2 + 1.82 * beta + 1.43


def select_rank(singular_values, rows, cols, policy="gavish_donoho", value=None):
    """Choose a truncation rank from a singular value spectrum.

    Parameters
    ----------
    singular_values : array_like
        Descending, positive.
    rows, cols : int
        Shape of the decomposed matrix.
    policy : {'fixed', 'energy', 'gavish_donoho'}
        ``'gavish_donoho'`` keeps values above ``omega(beta) * median(s)``
        and above the numerical-rank floor ``max(rows, cols) * eps * s[0]``.
    value : int or float
        The rank for ``'fixed'``; the cumulative energy fraction for
        ``'energy'``.

    Returns
    -------
    int
    """
    s = np.asarray(singular_values, dtype=float)
    if s.size == 0:
        raise EmptySpectrum("no singular values")
    if policy == "fixed":
        r = int(value)
        if r < 1 or r > s.size:
            raise RankTooLarge(f"fixed rank {r} outside 1..{s.size}")
        return r
    if policy == "energy":
        tau = float(value)
        if not 0 < tau <= 1:
            raise ConfigError(f"energy fraction must be in (0, 1], got {tau}")
        cum = np.cumsum(s ** 2) / np.sum(s ** 2)
        return int(min(np.searchsorted(cum, tau * (1 - 1e-15)) + 1, s.size))
    if policy == "gavish_donoho":
        beta = min(rows, cols) / max(rows, cols)
        # values at rounding level carry no signal even when the median sits there too
        floor = max(rows, cols) * np.finfo(float).eps * s[0]
        tau = max(gavish_donoho_omega(beta) * np.median(s), floor)
        return int(max(np.count_nonzero(s > tau), 1))
    raise ConfigError(f"unknown rank policy {policy!r}")


# -- model container -----------------------------------------------------

_ARRAY_FIELDS = ("u_r", "sigma_r", "v_r", "a_tilde", "mu", "lambda_c", "w", "phi_aug", "b0")


def _npy_bytes(arr):
    buf = io.BytesIO()
    np.lib.format.write_array(buf, np.ascontiguousarray(arr), allow_pickle=False)
    return buf.getvalue()


def save_model(model, path):
    """Write a versioned, self-describing ``.npz`` container.

    Entries carry fixed timestamps so identical models give identical bytes.
    """
    header = {
        "format_version": FORMAT_VERSION,
        "p": model.p,
        "d": model.d,
        "r": model.r,
        "dt": model.dt,
        "svd_method": model.svd_method,
        "channel_names": model.channel_names,
        "filter": None if model.filter is None else {
            "order": model.filter.order, "low_hz": model.filter.low_hz,
            "high_hz": model.filter.high_hz, "zero_phase": model.filter.zero_phase},
        "arrays": {k: {"dtype": str(getattr(model, k).dtype), "shape": list(getattr(model, k).shape)}
                   for k in _ARRAY_FIELDS},
    }
    entries = {"header": np.frombuffer(json.dumps(header, sort_keys=True).encode(), dtype=np.uint8)}
    for k in _ARRAY_FIELDS:
        entries[k] = getattr(model, k)
    if model.norm is not None:
        entries["norm_means"] = model.norm.means
        entries["norm_stds"] = model.norm.stds
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_STORED) as zf:
        for name, arr in entries.items():
            info = zipfile.ZipInfo(name + ".npy", date_time=(1980, 1, 1, 0, 0, 0))
            zf.writestr(info, _npy_bytes(arr))


def load_model(path):
    """Inverse of :func:`save_model`; floats round-trip bit-exactly."""
    try:
        archive = np.load(path, allow_pickle=False)
    except FileNotFoundError as exc:
        raise UsageError(f"model file not found: {path}") from exc
    except (OSError, ValueError, zipfile.BadZipFile) as exc:
        raise DataError(f"{path} is not a model container: {exc}") from exc
    with archive as z:
        if "header.npy" not in z.files and "header" not in z.files:
            raise DataError(f"{path} has no model header")
        header = json.loads(bytes(z["header"]).decode())
        if header.get("format_version") != FORMAT_VERSION:
            raise DataError(f"unsupported model format version {header.get('format_version')}")
        arrays = {k: z[k] for k in _ARRAY_FIELDS}
        norm = None
        if "norm_means" in z.files:
            norm = NormalizationParams(z["norm_means"], z["norm_stds"])
    filt = header.get("filter")
    return KoopmanModel(
        r=int(header["r"]), dt=float(header["dt"]), p=int(header["p"]), d=int(header["d"]),
        norm=norm, filter=None if filt is None else FilterSpec(**filt),
        channel_names=header.get("channel_names"), svd_method=header.get("svd_method", "auto"),
        **arrays)
