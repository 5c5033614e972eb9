"""Time-dependent vector fields and their differential invariants.

A :class:`VectorField` wraps a vectorised velocity function ``b(t, X)`` acting
on arrays of points ``X`` of shape (N, n).  Builtin fields ship their exact
gradient ``Db``; everything else falls back to central differences.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.special import gamma as gamma_fn
from scipy.stats import qmc

from ._interp import multilinear
from .errors import ConfigError, DomainError, NumericError

VelocityFn = Callable[[float, np.ndarray], np.ndarray]
JacobianFn = Callable[[float, np.ndarray], np.ndarray]


def as_points(x, n: int) -> tuple[np.ndarray, bool]:
    """Return ``x`` as an (N, n) float array and whether it was a single point."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1:
        if arr.shape[0] != n:
            raise ValueError(f"expected a point in R^{n}, got shape {arr.shape}")
        return arr[None, :], True
    if arr.ndim != 2 or arr.shape[1] != n:
        raise ValueError(f"expected points of shape (N, {n}), got {arr.shape}")
    return arr, False


def log_plus(u):
    return np.log(np.maximum(u, 1.0))


def growth_weight(r):
    """The weight 1 + r log+ r of the admissible growth condition."""
    return 1.0 + r * log_plus(r)


@dataclass(frozen=True)
class VectorField:
    """A velocity field b(t, x) on [0, T] x R^n (or on a box for sampled fields).

    ``sa_sup`` optionally returns the exact sup-norm of the anticonformal part
    at time t; ``domain`` is ``None`` for fields defined on all of R^n.
    """

    dimension: int
    velocity_fn: VelocityFn
    jacobian_fn: Optional[JacobianFn] = None
    T: float = 4.0
    kind: str = "analytic-builtin"
    name: str = "custom"
    domain: Optional[tuple[np.ndarray, np.ndarray]] = None
    h_fd: Optional[float] = None
    sa_sup: Optional[Callable[[float], float]] = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.dimension < 2:
            raise ValueError("dimension must be at least 2")
        if not self.T > 0:
            raise ValueError("T must be positive")
        if self.kind not in ("analytic-builtin", "sampled-grid"):
            raise ValueError(f"unknown field kind {self.kind!r}")

    @property
    def fd_step(self) -> float:
        if self.h_fd is not None:
            return self.h_fd
        if self.domain is None:
            return 1e-4
        lo, hi = self.domain
        return 1e-4 * float(np.linalg.norm(np.asarray(hi) - np.asarray(lo)))

    def contains(self, X) -> np.ndarray:
        X, _ = as_points(X, self.dimension)
        if self.domain is None:
            return np.ones(X.shape[0], dtype=bool)
        lo, hi = self.domain
        return np.all((X >= lo) & (X <= hi), axis=1)

    def _check(self, X):
        if self.domain is not None and not np.all(self.contains(X)):
            raise DomainError(f"field {self.name!r} evaluated outside its domain")

    def __call__(self, t: float, x) -> np.ndarray:
        X, single = as_points(x, self.dimension)
        self._check(X)
        v = np.asarray(self.velocity_fn(t, X), dtype=float)
        return v[0] if single else v

    def fd_jacobian(self, t: float, x, h: Optional[float] = None) -> np.ndarray:
        """Central-difference gradient; entry [i, j] is d b_i / d x_j."""
        X, single = as_points(x, self.dimension)
        h = self.fd_step if h is None else h
        n = self.dimension
        J = np.empty((X.shape[0], n, n))
        for j in range(n):
            e = np.zeros(n)
            e[j] = h
            J[:, :, j] = (self(t, X + e) - self(t, X - e)) / (2 * h)
        return J[0] if single else J

    def jacobian(self, t: float, x) -> np.ndarray:
        X, single = as_points(x, self.dimension)
        if self.jacobian_fn is None:
            J = self.fd_jacobian(t, X)
        else:
            self._check(X)
            J = np.asarray(self.jacobian_fn(t, X), dtype=float)
        if not np.all(np.isfinite(J)):
            raise NumericError(f"non-finite derivative of field {self.name!r} at t={t}")
        return J[0] if single else J

    def divergence(self, t: float, x) -> np.ndarray:
        return np.trace(self.jacobian(t, x), axis1=-2, axis2=-1)

    def with_T(self, T: float) -> "VectorField":
        return replace(self, T=float(T))


# -- builtin catalogue ------------------------------------------------------


def _broadcast_jac(A, N):
    return np.broadcast_to(A, (N,) + A.shape).copy()


def linear(A, T: float = 4.0, name: str = "linear") -> VectorField:
    """b(x) = A x with exact gradient A."""
    A = np.array(A, dtype=float)
    n = A.shape[0]
    S = 0.5 * (A + A.T) - np.trace(A) / n * np.eye(n)
    sa = float(np.linalg.norm(S, 2))
    return VectorField(
        n,
        lambda t, X: X @ A.T,
        lambda t, X: _broadcast_jac(A, X.shape[0]),
        T=T,
        name=name,
        sa_sup=lambda t: sa,
        params={"A": A.tolist()},
    )


def zero(n: int = 2, T: float = 4.0) -> VectorField:
    return linear(np.zeros((n, n)), T=T, name="zero")


def constant(c, T: float = 4.0) -> VectorField:
    c = np.asarray(c, dtype=float)
    n = c.shape[0]
    return VectorField(
        n,
        lambda t, X: np.broadcast_to(c, X.shape).copy(),
        lambda t, X: np.zeros((X.shape[0], n, n)),
        T=T,
        name="constant",
        sa_sup=lambda t: 0.0,
        params={"c": c.tolist()},
    )


def rotation(omega: float = 1.0, T: float = 4.0) -> VectorField:
    f = linear([[0.0, -omega], [omega, 0.0]], T=T, name="rotation")
    return replace(f, params={"omega": omega})


def dilation(rate: float = 1.0, n: int = 2, T: float = 4.0) -> VectorField:
    f = linear(rate * np.eye(n), T=T, name="dilation")
    return replace(f, params={"rate": rate, "n": n})


def shear(rate: float = 1.0, T: float = 4.0) -> VectorField:
    f = linear([[0.0, rate], [0.0, 0.0]], T=T, name="shear")
    return replace(f, params={"rate": rate})


_MODULATIONS = {
    "sin": (np.sin, lambda t: 1.0 - np.cos(t)),
    "cos": (np.cos, np.sin),
    "one": (lambda t: np.ones_like(np.asarray(t, dtype=float)), lambda t: np.asarray(t, dtype=float)),
}


def modulated_shear(g: str = "sin", T: float = 4.0) -> VectorField:
    """b(t, x) = g(t) (x_2, 0) for g in {sin, cos, one}."""
    try:
        gf, G = _MODULATIONS[g]
    except KeyError:
        raise ConfigError(f"unknown modulation {g!r}; choose from {sorted(_MODULATIONS)}") from None

    def velocity(t, X):
        out = np.zeros_like(X)
        out[:, 0] = gf(t) * X[:, 1]
        return out

    def jac(t, X):
        J = np.zeros((X.shape[0], 2, 2))
        J[:, 0, 1] = gf(t)
        return J

    return VectorField(
        2, velocity, jac, T=T, name="modulated_shear",
        sa_sup=lambda t: 0.5 * abs(float(gf(t))), params={"g": g},
    )


def modulation_integral(g: str, t: float) -> float:
    """Exact integral of the shear modulation g over [0, t]."""
    return float(_MODULATIONS[g][1](t))


def disc_vortex(radius: float = 1.0, strength: float = 1.0, T: float = 4.0) -> VectorField:
    """Velocity induced by vorticity ``strength`` uniformly spread on a disc.

    Solid-body rotation inside, irrotational 1/r decay outside.  The gradient
    jumps across the rim, so this is Lipschitz but not C^1.
    """
    a2 = radius * radius
    c = 0.5 * strength * a2

    def velocity(t, X):
        x, y = X[:, 0], X[:, 1]
        r2 = x * x + y * y
        inside = r2 <= a2
        scale = np.where(inside, 0.5 * strength, c / np.where(inside, 1.0, r2))
        return np.stack([-scale * y, scale * x], axis=1)

    def jac(t, X):
        x, y = X[:, 0], X[:, 1]
        r2 = x * x + y * y
        inside = r2 <= a2
        r4 = np.where(inside, 1.0, r2 * r2)
        J = np.empty((X.shape[0], 2, 2))
        J[:, 0, 0] = np.where(inside, 0.0, c * 2 * x * y / r4)
        J[:, 0, 1] = np.where(inside, -0.5 * strength, c * (y * y - x * x) / r4)
        J[:, 1, 0] = np.where(inside, 0.5 * strength, c * (y * y - x * x) / r4)
        J[:, 1, 1] = -J[:, 0, 0]
        return J

    return VectorField(
        2, velocity, jac, T=T, name="disc_vortex",
        sa_sup=lambda t: 0.5 * abs(strength), params={"radius": radius, "strength": strength},
    )


BUILTINS: dict[str, Callable[..., VectorField]] = {
    "zero": zero,
    "constant": constant,
    "linear": linear,
    "rotation": rotation,
    "dilation": dilation,
    "shear": shear,
    "modulated_shear": modulated_shear,
    "disc_vortex": disc_vortex,
}


def builtin(name: str, **params) -> VectorField:
    try:
        factory = BUILTINS[name]
    except KeyError:
        raise ConfigError(f"unknown builtin field {name!r}; known: {sorted(BUILTINS)}") from None
    try:
        return factory(**params)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for field {name!r}: {exc}") from None


def from_callable(velocity, n: int = 2, jacobian=None, T: float = 4.0, name: str = "custom", **kw) -> VectorField:
    return VectorField(n, velocity, jacobian, T=T, name=name, **kw)


def sampled(data, lo, hi, t_range=(0.0, 1.0), name: str = "sampled", extrapolate: bool = False) -> VectorField:
    """Field given on a cell-centred lattice, shape (nt, N_1, ..., N_n, n).

    Space is interpolated multilinearly, time linearly between the nt
    equispaced time samples spanning ``t_range`` (nt = 1 means steady).
    With ``extrapolate`` the field is defined everywhere, taking the
    nearest-node value outside the box; otherwise leaving the box is an error.
    """
    data = np.asarray(data, dtype=float)
    n = data.shape[-1]
    if data.ndim != n + 2:
        raise ValueError("sampled field data must have shape (nt, N_1..N_n, n)")
    if not np.all(np.isfinite(data)):
        raise NumericError("sampled field contains non-finite values")
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    nt = data.shape[0]
    t0, t1 = map(float, t_range)

    def velocity(t, X):
        if nt == 1:
            return multilinear(data[0], lo, hi, X, ncomp=n)[0]
        s = np.clip((t - t0) / (t1 - t0), 0.0, 1.0) * (nt - 1)
        k = min(int(np.floor(s)), nt - 2)
        w = s - k
        v0 = multilinear(data[k], lo, hi, X, ncomp=n)[0]
        if w == 0.0:
            return v0
        v1 = multilinear(data[k + 1], lo, hi, X, ncomp=n)[0]
        return (1 - w) * v0 + w * v1

    return VectorField(
        n, velocity, None, T=t1 if t1 > 0 else 1.0, kind="sampled-grid",
        name=name, domain=None if extrapolate else (lo, hi), params={"shape": list(data.shape)},
        h_fd=1e-4 * float(np.linalg.norm(hi - lo)),
    )


# -- differential invariants -----------------------------------------------


@dataclass(frozen=True)
class AnticonformalPart:
    matrix: np.ndarray
    operator_norm: float


def anticonformal_matrix(Db: np.ndarray) -> np.ndarray:
    """S_A = (Db + Db^T)/2 - tr(Db)/n I, batched over leading axes."""
    n = Db.shape[-1]
    sym = 0.5 * (Db + np.swapaxes(Db, -1, -2))
    tr = np.trace(Db, axis1=-2, axis2=-1)
    return sym - (tr / n)[..., None, None] * np.eye(n)


def anticonformal_norms(field: VectorField, t: float, X) -> np.ndarray:
    """Operator norms |S_A b(t, x)| for a batch of points."""
    S = anticonformal_matrix(field.jacobian(t, as_points(X, field.dimension)[0]))
    # symmetric: operator norm is the largest |eigenvalue|
    return np.max(np.abs(np.linalg.eigvalsh(S)), axis=-1)


def anticonformal_part(field: VectorField, t: float, x) -> AnticonformalPart:
    _check_time(field, t)
    S = anticonformal_matrix(field.jacobian(t, np.asarray(x, dtype=float)))
    return AnticonformalPart(S, float(np.linalg.norm(S, 2)))


def _check_time(field: VectorField, t: float):
    if not (0.0 <= t <= field.T):
        raise DomainError(f"time {t} outside [0, {field.T}]")


def sa_sup_norm(field: VectorField, t: float, lattice=None) -> float:
    """Sup-norm proxy of S_A b(t, .): exact when the field supplies it, else a lattice max."""
    if field.sa_sup is not None:
        return float(field.sa_sup(t))
    if lattice is None:
        if field.domain is None:
            raise ValueError("a sampling lattice is required for fields without sa_sup")
        lo, hi = field.domain
        axes = [np.linspace(lo[k], hi[k], 33)[1:-1] for k in range(field.dimension)]
        lattice = np.stack([a.ravel() for a in np.meshgrid(*axes, indexing="ij")], axis=1)
    return float(np.max(anticonformal_norms(field, t, lattice)))


@functools.lru_cache(maxsize=8)
def _halton(n: int, count: int) -> np.ndarray:
    return qmc.Halton(d=n, scramble=False).random(count)


def growth_samples(box, sample_count: int, min_level: int = -6) -> np.ndarray:
    """Multiscale quasi-random sample set for sup-type quantities over ``box``.

    Level k contributes the first ``sample_count`` Halton points of the cube
    [-2^k, 2^k]^n that fall inside the box.  Levels run from ``min_level`` up
    to the first cube containing the box, so the set grows with the box.
    """
    lo, hi = (tuple(float(v) for v in np.ravel(b)) for b in box)
    return _growth_samples(lo, hi, int(sample_count), int(min_level))[0]


@functools.lru_cache(maxsize=32)
def _growth_samples(lo: tuple, hi: tuple, sample_count: int, min_level: int):
    lo, hi = np.array(lo), np.array(hi)
    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    if np.any(hi < lo):
        raise ValueError("empty sample box")
    n = lo.shape[0]
    extent = float(np.max(np.abs(np.concatenate([lo, hi]))))
    top = max(min_level, math.ceil(math.log2(extent)) if extent > 0 else min_level)
    base = _halton(n, sample_count)
    pts = []
    for k in range(min_level, top + 1):
        P = (2.0 * base - 1.0) * 2.0**k
        pts.append(P[np.all((P >= lo) & (P <= hi), axis=1)])
    if np.all((lo <= 0) & (hi >= 0)):
        pts.append(np.zeros((1, n)))
    X = np.concatenate(pts, axis=0)
    w = growth_weight(np.sqrt(np.einsum("ij,ij->i", X, X)))
    X.flags.writeable = False
    w.flags.writeable = False
    return X, w


def growth_functional(field: VectorField, t: float, sample_box, sample_count: int = 10_000) -> float:
    """Sampled sup of |b(t, x)| / (1 + |x| log+ |x|) over ``sample_box``."""
    lo, hi = (tuple(float(v) for v in np.ravel(b)) for b in sample_box)
    X, w = _growth_samples(lo, hi, int(sample_count), -6)
    if X.shape[0] == 0:
        return 0.0
    v = field(t, X)
    if not np.all(np.isfinite(v)):
        raise NumericError("non-finite field value while sampling growth functional")
    return float(np.sqrt(np.max(np.einsum("ij,ij->i", v, v) / (w * w))))


def zygmund_seminorm(field: VectorField, t: float, probes: Sequence) -> float:
    """Max over (x, h) probes of |b(x+h) + b(x-h) - 2 b(x)| / |h|."""
    xs = np.array([p[0] for p in probes], dtype=float)
    hs = np.array([p[1] for p in probes], dtype=float)
    hn = np.linalg.norm(hs, axis=1)
    if np.any(hn == 0):
        raise ValueError("zero-length probe offset")
    d2 = field(t, xs + hs) + field(t, xs - hs) - 2 * field(t, xs)
    return float(np.max(np.linalg.norm(d2, axis=1) / hn))


# -- mollification -----------------------------------------------------------


def bump(r):
    """Unnormalised classical bump exp(-1/(1 - r^2)) on the unit ball."""
    r = np.asarray(r, dtype=float)
    inside = r < 1.0
    out = np.zeros_like(r)
    out[inside] = np.exp(-1.0 / (1.0 - r[inside] ** 2))
    return out


def bump_mass(n: int) -> float:
    sphere = 2 * math.pi ** (n / 2) / gamma_fn(n / 2)
    return sphere * quad(lambda r: float(bump(r)) * r ** (n - 1), 0.0, 1.0, epsabs=1e-14)[0]


@dataclass(frozen=True)
class MollifierSpec:
    epsilon: float
    dimension: int = 2
    nodes_per_axis: int = 9

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("mollifier epsilon must be positive")

    def density(self, x) -> np.ndarray:
        """rho_eps(x) = rho(x / eps) / eps^n with rho of unit mass."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        r = np.linalg.norm(x, axis=1) / self.epsilon
        return bump(r) / bump_mass(self.dimension) / self.epsilon**self.dimension

    def quadrature(self) -> tuple[np.ndarray, np.ndarray]:
        """Midpoint nodes on [-eps, eps]^n masked by the ball, weights summing to 1."""
        m, n, eps = self.nodes_per_axis, self.dimension, self.epsilon
        ax = -eps + (np.arange(m) + 0.5) * 2 * eps / m
        Y = np.stack([g.ravel() for g in np.meshgrid(*([ax] * n), indexing="ij")], axis=1)
        w = self.density(Y) * (2 * eps / m) ** n
        keep = w > 0
        Y, w = Y[keep], w[keep]
        return Y, w / w.sum()


def mollify(field: VectorField, spec: MollifierSpec) -> VectorField:
    """b_eps(t, x) = sum_k w_k b(t, x - y_k) over the ball quadrature of ``spec``."""
    if spec.dimension != field.dimension:
        spec = replace(spec, dimension=field.dimension)
    Y, w = spec.quadrature()
    n = field.dimension

    def shifted(X):
        return (X[:, None, :] - Y[None, :, :]).reshape(-1, n)

    def velocity(t, X):
        try:
            V = field(t, shifted(X))
        except DomainError as exc:
            raise DomainError(f"mollifier nodes leave the domain of {field.name!r}") from exc
        return np.einsum("k,nki->ni", w, V.reshape(X.shape[0], len(w), n))

    def jac(t, X):
        J = field.jacobian(t, shifted(X))
        return np.einsum("k,nkij->nij", w, J.reshape(X.shape[0], len(w), n, n))

    domain = None
    if field.domain is not None:
        lo, hi = field.domain
        domain = (np.asarray(lo) + spec.epsilon, np.asarray(hi) - spec.epsilon)
    return replace(
        field, velocity_fn=velocity, jacobian_fn=jac, domain=domain,
        name=f"mollified({field.name},eps={spec.epsilon:g})",
        params={**field.params, "epsilon": spec.epsilon},
    )
