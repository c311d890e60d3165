"""Time-delay (Hankel) embedding of a multichannel signal."""

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import as_strided

from .errors import InsufficientSamples, OutOfRange


def _hankel_view(values, d):
    # Sensor-major within each time block: row t*p + i of column j is
    # values[i, j + t]. On the time-major copy that is a flat offset of
    # j*p + row, so the whole matrix is a strided view with no duplication.
    p, n = values.shape
    backing = np.ascontiguousarray(values.T)
    flat = backing.reshape(-1)
    step = flat.itemsize
    view = as_strided(flat, shape=(p * d, n - d + 1), strides=(step, p * step), writeable=False)
    return backing, view


@dataclass(frozen=True)
class HankelPair:
    """Time-shifted trajectory matrices over a shared backing array.

    ``h1`` and ``h2`` are read-only views of shape ``(p*d, m-1)`` with
    ``m = N - d + 1``; ``full`` is the complete ``(p*d, m)`` matrix.
    """

    backing: np.ndarray
    full: np.ndarray
    p: int
    d: int
    dt: float

    @property
    def m(self):
        return self.full.shape[1]

    @property
    def h1(self):
        return self.full[:, :-1]

    @property
    def h2(self):
        return self.full[:, 1:]

    @property
    def shape(self):
        return self.h1.shape


def build_hankel(x, d):
    """Delay-embed `x` with depth `d`.

    Parameters
    ----------
    x : TimeSeriesMatrix
    d : int
        Number of stacked snapshots, at least 2.

    Returns
    -------
    HankelPair

    Examples
    --------
    >>> from koopman_sensing.preprocessing import TimeSeriesMatrix
    >>> h = build_hankel(TimeSeriesMatrix([[1., 2, 3, 4, 5]], 1.0), 2)
    >>> h.h1.tolist()
    [[1.0, 2.0, 3.0], [2.0, 3.0, 4.0]]
    """
    d = int(d)
    if d < 2:
        raise InsufficientSamples(f"delay depth must be at least 2, got {d}")
    if x.n_samples < d + 2:
        raise InsufficientSamples(f"need N >= d + 2 = {d + 2} samples, got {x.n_samples}")
    backing, full = _hankel_view(x.values, d)
    return HankelPair(backing=backing, full=full, p=x.p, d=d, dt=x.dt)


def embed_window(x, d, start):
    """Augmented state ``[y_start; ...; y_start+d-1]`` as a flat vector."""
    start = int(start)
    if start < 0 or start + d > x.n_samples:
        raise OutOfRange(f"window [{start}, {start + d}) outside 0..{x.n_samples}")
    return x.values[:, start:start + d].T.reshape(-1).copy()
