"""Grid functions and discrete seminorms: BMO, VMO modulus, W^{1,n}, Gagliardo.

Grids are cell-centred: node i on an axis of the box [lo, hi] with N cells
sits at lo + (i + 1/2) h, h = (hi - lo) / N, and carries the cell volume.
Mean oscillations are taken over dyadic cubes of the lattice, i.e. blocks of
2^k x ... x 2^k cells aligned with the lower box corner.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from ._interp import cell_centres, multilinear
from .errors import CoverageError, GridSizeError, NumericError


@dataclass(frozen=True)
class GridFunction:
    lo: np.ndarray
    hi: np.ndarray
    values: np.ndarray
    meta: dict = dc_field(default_factory=dict, compare=False)

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "values", values)
        if lo.shape != (values.ndim,) or hi.shape != lo.shape:
            raise ValueError("box and value array dimensions disagree")
        if np.any(hi <= lo):
            raise ValueError("empty box")
        if min(values.shape) < 2:
            raise ValueError("resolution must be at least 2 per axis")
        if not np.all(np.isfinite(values)):
            raise NumericError("grid function has non-finite values")

    @classmethod
    def from_function(cls, f: Callable[[np.ndarray], np.ndarray], lo, hi, resolution) -> "GridFunction":
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        resolution = tuple(int(r) for r in np.broadcast_to(resolution, lo.shape))
        X = nodes(lo, hi, resolution)
        return cls(lo, hi, np.asarray(f(X), dtype=float).reshape(resolution))

    @property
    def dimension(self) -> int:
        return self.values.ndim

    @property
    def resolution(self) -> tuple:
        return self.values.shape

    @property
    def spacing(self) -> np.ndarray:
        return (self.hi - self.lo) / np.asarray(self.resolution)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def axes(self) -> list[np.ndarray]:
        return cell_centres(self.lo, self.hi, self.resolution)

    def nodes(self) -> np.ndarray:
        return nodes(self.lo, self.hi, self.resolution)

    def with_values(self, values, **meta) -> "GridFunction":
        return GridFunction(self.lo, self.hi, values, meta)

    def __call__(self, X) -> np.ndarray:
        return multilinear(self.values, self.lo, self.hi, np.atleast_2d(X))[0]


def nodes(lo, hi, resolution) -> np.ndarray:
    axes = cell_centres(np.asarray(lo, float), np.asarray(hi, float), resolution)
    return np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)


@dataclass(frozen=True)
class SeminormResult:
    kind: str
    value: float
    resolution: tuple
    family: str
    params: dict = dc_field(default_factory=dict)

    def row(self) -> dict:
        return {"kind": self.kind, "params": self.params, "resolution": "x".join(map(str, self.resolution)),
                "value": self.value}


# -- mean oscillation --------------------------------------------------------


def _block_view(v: np.ndarray, s: int) -> np.ndarray:
    """Blocks of s cells per axis, block axes flattened last: shape (M_1..M_n, s^n)."""
    n = v.ndim
    m = [d // s for d in v.shape]
    v = v[tuple(slice(0, k * s) for k in m)]
    shape = []
    for k in m:
        shape += [k, s]
    b = v.reshape(shape)
    b = b.transpose(list(range(0, 2 * n, 2)) + list(range(1, 2 * n, 2)))
    return b.reshape(tuple(m) + (s**n,))


def mean_oscillation_by_level(u: GridFunction, sides: Sequence[int]) -> dict:
    """Max mean oscillation over all dyadic cubes of each side (in cells)."""
    out = {}
    for s in sides:
        b = _block_view(u.values, s)
        b = b - b[..., :1]  # exact zeros on constant blocks
        mean = b.mean(axis=-1, keepdims=True)
        out[s] = float(np.abs(b - mean).mean(axis=-1).max())
    return out


def _dyadic_sides(u: GridFunction, min_scale, max_scale) -> list[int]:
    h = float(u.spacing.min())
    lo_cells = 2 if min_scale is None else int(np.ceil(min_scale / h - 1e-9))
    hi_cells = min(u.resolution) if max_scale is None else int(np.floor(max_scale / h + 1e-9))
    if lo_cells < 2:
        raise ValueError("minimum cube scale must be at least 2 grid cells")
    hi_cells = min(hi_cells, min(u.resolution))
    sides = []
    s = 2
    while s <= hi_cells:
        if s >= lo_cells:
            sides.append(s)
        s *= 2
    if not sides:
        raise ValueError("empty dyadic cube family for the requested scales")
    return sides


def bmo_seminorm(u: GridFunction, max_scale: Optional[float] = None, min_scale: Optional[float] = None) -> SeminormResult:
    """Max over dyadic cubes with side in [min_scale, max_scale] of (1/|Q|) int_Q |u - u_Q|."""
    sides = _dyadic_sides(u, min_scale, max_scale)
    levels = mean_oscillation_by_level(u, sides)
    return SeminormResult("BMO", max(levels.values()), u.resolution, "dyadic cubes",
                          {"sides_cells": sides})


def vmo_modulus(u: GridFunction, delta: float) -> SeminormResult:
    """Max mean oscillation over dyadic cubes of side at most delta."""
    sides = _dyadic_sides(u, None, delta)
    levels = mean_oscillation_by_level(u, sides)
    return SeminormResult("VMO", max(levels.values()), u.resolution, "dyadic cubes",
                          {"delta": delta, "sides_cells": sides})


# -- Sobolev type ------------------------------------------------------------


def w1n_seminorm(u: GridFunction) -> SeminormResult:
    """(sum |grad_h u|^n cellvol)^(1/n); central differences, one-sided at the edges."""
    if min(u.resolution) < 3:
        raise ValueError("W^{1,n} seminorm needs at least 3 nodes per axis")
    n = u.dimension
    grads = np.gradient(u.values, *u.spacing, edge_order=1)
    if n == 1:
        grads = [grads]
    g2 = sum(g * g for g in grads)
    val = float((np.sum(g2 ** (n / 2)) * u.cell_volume) ** (1.0 / n))
    return SeminormResult("W1n", val, u.resolution, "lattice", {"n": n})


GAGLIARDO_GUARD_SIDE = 64


def gagliardo_seminorm(u: GridFunction, s: float, p: float, guard: Optional[int] = None,
                       chunk: int = 512) -> SeminormResult:
    """(sum_{x != y} |u(x) - u(y)|^p / |x - y|^(n + s p) cellvol^2)^(1/p) over lattice nodes."""
    if not 0 < s < 1:
        raise ValueError("s must lie in (0, 1)")
    if not p > 0:
        raise ValueError("p must be positive")
    n = u.dimension
    guard = GAGLIARDO_GUARD_SIDE**n if guard is None else guard
    N = u.values.size
    if N > guard:
        raise GridSizeError(f"{N} nodes exceed the double-sum guard of {guard}; subsample the grid first")
    X = u.nodes()
    v = u.values.ravel()
    expo = (n + s * p) / 2.0
    total = 0.0
    for i in range(0, N, chunk):
        Xi = X[i:i + chunk]
        d2 = np.sum((Xi[:, None, :] - X[None, :, :]) ** 2, axis=-1)
        diff = np.abs(v[i:i + chunk, None] - v[None, :]) ** p
        rows = np.arange(Xi.shape[0])
        d2[rows, i + rows] = 1.0
        diff[rows, i + rows] = 0.0
        total += float(np.sum(diff / d2**expo))
    val = (total * u.cell_volume**2) ** (1.0 / p)
    return SeminormResult(f"Gagliardo(s={s:g},p={p:g})", val, u.resolution, "lattice pairs", {"s": s, "p": p})


SEMINORMS = {
    "bmo": lambda u, **kw: bmo_seminorm(u, **kw),
    "vmo": lambda u, delta=None, **kw: vmo_modulus(u, delta if delta is not None else 8 * float(u.spacing.min())),
    "w1n": lambda u, **kw: w1n_seminorm(u),
    "gagliardo": lambda u, s=0.5, **kw: gagliardo_seminorm(u, s, u.dimension / s),
}


def seminorm(kind: str, u: GridFunction, **kw) -> SeminormResult:
    try:
        fn = SEMINORMS[kind.lower()]
    except KeyError:
        raise ValueError(f"unknown seminorm {kind!r}; choose from {sorted(SEMINORMS)}") from None
    return fn(u, **kw)


# -- composition ---------------------------------------------------------------


def compose_with_map(u: Union[GridFunction, Callable], inverse_map: Callable[[np.ndarray], np.ndarray],
                     target_box=None, target_resolution=None, max_clip: float = 0.10) -> GridFunction:
    """v(x) = u(inverse_map(x)) at the nodes of the target lattice.

    Grid functions are interpolated multilinearly; images outside u's box take
    the nearest-node value and are counted in ``meta['clipped_fraction']``.
    A plain callable ``u`` is evaluated exactly at the images.
    """
    if target_box is None:
        if not isinstance(u, GridFunction):
            raise ValueError("target_box is required when u is not a grid function")
        target_box = (u.lo, u.hi)
    if target_resolution is None:
        if not isinstance(u, GridFunction):
            raise ValueError("target_resolution is required when u is not a grid function")
        target_resolution = u.resolution
    lo, hi = (np.asarray(b, dtype=float) for b in target_box)
    resolution = tuple(int(r) for r in np.broadcast_to(target_resolution, lo.shape))
    Y = np.asarray(inverse_map(nodes(lo, hi, resolution)), dtype=float)
    if isinstance(u, GridFunction):
        vals, outside = multilinear(u.values, u.lo, u.hi, Y)
        frac = float(outside.mean())
        if frac > max_clip:
            raise CoverageError(f"{100 * frac:.1f}% of image points fall outside the source box")
    else:
        vals = np.asarray(u(Y), dtype=float)
        frac = 0.0
    return GridFunction(lo, hi, vals.reshape(resolution), {"clipped_fraction": frac, "clipped": frac > 0})
