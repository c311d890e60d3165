"""CSV and JSON readers/writers shared by the command line front end."""

import csv
import json

import numpy as np

from .errors import DataError, MissingHeader, NonFiniteValue, NonUniformSampling, UsageError
from .preprocessing import TimeSeriesMatrix

JITTER_TOL = 1e-6


def ingest_csv(path, dt=None):
    """Read a header-first CSV into a :class:`TimeSeriesMatrix`.

    A ``time`` column (seconds) fixes ``dt`` and must be uniform to 1e-6
    relative jitter; without one, `dt` must be given. All other columns are
    channels in file order.

    Raises
    ------
    MissingHeader, NonUniformSampling, NonFiniteValue
    """
    try:
        fh = open(path, newline="")
    except FileNotFoundError as exc:
        raise UsageError(f"input file not found: {path}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise MissingHeader(f"{path} is empty") from None
        if not header or any(_is_number(h) for h in header):
            raise MissingHeader(f"{path} has no header row")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                vals = [float(v) for v in row]
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-numeric field") from None
            rows.append(vals)
    if len(rows) < 2:
        raise DataError(f"{path} has fewer than two samples")
    table = np.array(rows)
    bad = np.argwhere(~np.isfinite(table))
    if bad.size:
        r, c = bad[0]
        raise NonFiniteValue(int(r) + 2, header[c], f"non-finite value at line {r + 2}, column {header[c]!r}")

    if "time" in header:
        tcol = header.index("time")
        t = table[:, tcol]
        steps = np.diff(t)
        step = (t[-1] - t[0]) / (t.size - 1)
        if step <= 0 or np.max(np.abs(steps - step)) > JITTER_TOL * step:
            raise NonUniformSampling(f"{path}: time column is not uniformly spaced")
        if dt is None:
            dt = float(step)
        table = np.delete(table, tcol, axis=1)
        header = header[:tcol] + header[tcol + 1:]
    elif dt is None:
        raise UsageError(f"{path} has no time column; set data.dt")
    if not header:
        raise DataError(f"{path} has no channel columns")
    return TimeSeriesMatrix(table.T, dt, channel_names=header)


def _is_number(text):
    try:
        float(text)
    except ValueError:
        return False
    return True


def fmt(x):
    """Shortest round-trip text for a float."""
    return repr(float(x))


def write_timeseries_csv(x, path, with_time=True, suffix=""):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        names = [f"{n}{suffix}" for n in x.channel_names]
        writer.writerow((["time"] if with_time else []) + names)
        for k, row in enumerate(x.values.T):
            lead = [fmt(k * x.dt)] if with_time else []
            writer.writerow(lead + [fmt(v) for v in row])


def write_rows_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])


def write_json(obj, path):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise UsageError(f"file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"{path} is not valid JSON: {exc}") from exc


def read_reference_modes(path, p):
    """Reference modes: ``freq_hz`` then ``p`` real or ``2p`` interleaved
    real/imaginary shape components per row.

    Returns
    -------
    freqs : ndarray, shape (n_modes,)
    shapes : ndarray of complex, shape (p, n_modes)
    """
    try:
        fh = open(path, newline="")
    except FileNotFoundError as exc:
        raise UsageError(f"reference modes file not found: {path}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[0].strip() != "freq_hz":
            raise MissingHeader(f"{path}: first column must be freq_hz")
        ncomp = len(header) - 1
        if ncomp not in (p, 2 * p):
            raise DataError(f"{path}: {ncomp} shape columns, expected {p} or {2 * p}")
        try:
            rows = [[float(v) for v in row] for row in reader if row]
        except ValueError:
            raise DataError(f"{path}: non-numeric field") from None
    if not rows:
        raise DataError(f"{path} lists no modes")
    table = np.array(rows)
    if not np.all(np.isfinite(table)):
        raise DataError(f"{path} contains non-finite values")
    comps = table[:, 1:]
    shapes = comps if ncomp == p else comps[:, 0::2] + 1j * comps[:, 1::2]
    return table[:, 0], np.asarray(shapes, dtype=complex).T
