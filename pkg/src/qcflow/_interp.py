"""Multilinear interpolation on cell-centred lattices."""

from __future__ import annotations

import itertools

import numpy as np

SNAP_TOL = 1e-9


def cell_centres(lo, hi, counts):
    """Per-axis node coordinates: node i sits at lo + (i + 1/2) h."""
    return [lo[k] + (np.arange(counts[k]) + 0.5) * (hi[k] - lo[k]) / counts[k] for k in range(len(counts))]


def multilinear(values, lo, hi, points, ncomp=0):
    """Interpolate lattice ``values`` at ``points`` of shape (N, n).

    ``values`` has shape ``counts`` or ``counts + (ncomp,)``. Points outside the
    box take the nearest-node value; the returned mask marks them. Fractional
    indices within ``SNAP_TOL`` of an integer are snapped so that evaluating at
    nodes reproduces node values bit for bit.
    """
    points = np.asarray(points, dtype=float)
    n = points.shape[1]
    counts = values.shape[:n] if ncomp else values.shape
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    h = (hi - lo) / np.asarray(counts)
    outside = np.any((points < lo) | (points > hi), axis=1)

    idx0 = np.empty(points.shape, dtype=np.intp)
    frac = np.empty(points.shape)
    for k in range(n):
        f = (points[:, k] - lo[k]) / h[k] - 0.5
        r = np.rint(f)
        f = np.where(np.abs(f - r) < SNAP_TOL, r, f)
        f = np.clip(f, 0.0, counts[k] - 1)
        i0 = np.minimum(np.floor(f).astype(np.intp), counts[k] - 2)
        idx0[:, k] = i0
        frac[:, k] = f - i0

    strides = np.cumprod((1,) + tuple(counts[:0:-1]))[::-1]
    base = idx0 @ strides
    flat = values.reshape((-1, ncomp) if ncomp else (-1,))
    result = None
    for corner in itertools.product((0, 1), repeat=n):
        w = np.ones(points.shape[0])
        for k, c in enumerate(corner):
            w = w * (frac[:, k] if c else 1.0 - frac[:, k])
        v = np.take(flat, base + int(np.dot(corner, strides)), axis=0)
        term = (w[:, None] * v) if ncomp else w * v
        result = term if result is None else result + term
    return result, outside
