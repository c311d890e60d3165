"""Pure numpy implementations of the compiled kernels.

Selected automatically when the extension module is not built, or when
``KOOPMAN_SENSING_BACKEND=python`` is set.
"""

import numpy as np

BLOCK = 256


def nearest_neighbours(emb, n_ref, theiler):
    """Index of the closest point outside the temporal exclusion band.

    Parameters
    ----------
    emb : ndarray, shape (n, m)
        Delay vectors, one per row.
    n_ref : int
        Only rows ``0..n_ref-1`` act as references and as candidates.
    theiler : int
        Candidates with ``|i - j| <= theiler`` are skipped.

    Returns
    -------
    ndarray of int64, shape (n_ref,)
        -1 where no admissible candidate exists.
    """
    pts = np.ascontiguousarray(emb[:n_ref], dtype=np.float64)
    sq = np.einsum("ij,ij->i", pts, pts)
    out = np.full(n_ref, -1, dtype=np.int64)
    cols = np.arange(n_ref)
    for start in range(0, n_ref, BLOCK):
        stop = min(start + BLOCK, n_ref)
        blk = pts[start:stop]
        dist = sq[start:stop, None] + sq[None, :] - 2.0 * (blk @ pts.T)
        rows = np.arange(start, stop)
        dist[np.abs(rows[:, None] - cols[None, :]) <= theiler] = np.inf
        best = np.argmin(dist, axis=1)
        ok = np.isfinite(dist[np.arange(stop - start), best])
        out[start:stop] = np.where(ok, best, -1)
    return out


def divergence_curve(emb, nn, horizon, floor=0.0):
    """Mean log separation of neighbour pairs after ``k`` steps.

    Separations are clamped below at `floor` (distances under it are not
    resolvable); pairs with zero separation at a step are left out of that
    step's mean.
    """
    emb = np.asarray(emb, dtype=np.float64)
    ref = np.flatnonzero(nn >= 0)
    partner = nn[ref]
    curve = np.full(horizon, np.nan)
    for k in range(horizon):
        diff = emb[ref + k] - emb[partner + k]
        dist = np.sqrt(np.einsum("ij,ij->i", diff, diff))
        dist = np.maximum(dist[dist > 0], floor)
        if dist.size:
            curve[k] = np.log(dist).mean()
    return curve
