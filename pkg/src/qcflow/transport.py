"""Linear transport du/dt + b . grad u = 0 solved along backward characteristics.

u(t, x) = u0(psi_{0,t}(x)) with psi the backward flow.  Each snapshot traces
every lattice node back to time 0 and interpolates the initial datum there.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.integrate import trapezoid

from .errors import DomainError, InconsistencyError, SupportError
from .fields import VectorField, sa_sup_norm
from .flow import DEFAULT_CONTROL, StepControl, apriori_radius_bound, backward_points, forward_points
from .spaces import GridFunction, SeminormResult, compose_with_map, nodes, seminorm

log = logging.getLogger(__name__)

InitialDatum = Union[GridFunction, Callable[[np.ndarray], np.ndarray]]


@dataclass
class TransportSolution:
    initial: InitialDatum
    times: np.ndarray
    snapshots: list
    seminorm_track: dict = dc_field(default_factory=dict)
    field_name: str = ""
    characteristics: str = "backward"

    def snapshot(self, t: float) -> GridFunction:
        k = int(np.argmin(np.abs(self.times - t)))
        if not math.isclose(self.times[k], t, rel_tol=0, abs_tol=1e-12):
            raise KeyError(f"no snapshot at t={t}")
        return self.snapshots[k]

    def seminorm_ratios(self, kind: str) -> np.ndarray:
        """Seminorm of each snapshot relative to the t = 0 snapshot."""
        track = [r.value for r in self.seminorm_track[kind]]
        return np.array(track) / track[0]


def _target_grid(u0: InitialDatum, grid):
    if grid is not None:
        lo, hi, res = grid
        lo = np.asarray(lo, dtype=float)
        return lo, np.asarray(hi, dtype=float), tuple(int(r) for r in np.broadcast_to(res, lo.shape))
    if isinstance(u0, GridFunction):
        return u0.lo, u0.hi, u0.resolution
    raise ValueError("a target grid (lo, hi, resolution) is required for a callable initial datum")


def solve(field: VectorField, u0: InitialDatum, times: Sequence[float], seminorms: Sequence[str] = ("bmo",),
          grid=None, control: StepControl = DEFAULT_CONTROL, sa_budget: Optional[float] = None,
          characteristics: str = "backward", check_radius: bool = True, seminorm_options: Optional[dict] = None,
          max_clip: float = 0.10) -> TransportSolution:
    """Snapshots u(t, .) = u0(psi_{0,t}(.)) on the target lattice for each t in ``times``.

    ``characteristics='forward'`` composes with phi_{0,t} instead; that is not a
    solution and exists only as a negative control for the residual checks.
    """
    times = np.asarray(times, dtype=float)
    if np.any(times < 0) or np.any(times > field.T):
        raise DomainError(f"times must lie in [0, {field.T}]")
    if characteristics not in ("backward", "forward"):
        raise ValueError("characteristics must be 'backward' or 'forward'")
    lo, hi, res = _target_grid(u0, grid)
    X = nodes(lo, hi, res)
    R = float(np.max(np.linalg.norm(X, axis=1)))

    if sa_budget is not None:
        worst = max(sa_sup_norm(field, float(t)) for t in np.linspace(0.0, float(times.max(initial=0.0)), 9))
        if worst > sa_budget:
            warnings.warn(f"sampled |S_A b| = {worst:.3g} exceeds the budget {sa_budget:.3g}", stacklevel=2)

    # M(t) is nondecreasing, so the bound at the last time covers every snapshot
    bound = apriori_radius_bound(field, R, float(times.max())) if check_radius and times.max() > 0 else math.inf
    snapshots = []
    for t in times:
        t = float(t)
        if characteristics == "backward":
            Y = backward_points(field, 0.0, t, X, control)
        else:
            Y = forward_points(field, 0.0, t, X, control)
        if check_radius and t > 0:
            reach = float(np.max(np.linalg.norm(Y, axis=1)))
            if reach > bound * (1 + 1e-9):
                raise InconsistencyError(f"characteristics reach {reach:.6g} beyond the a-priori radius {bound:.6g}")
        snapshots.append(compose_with_map(u0, lambda _X, Y=Y: Y, (lo, hi), res, max_clip=max_clip))
        log.debug("snapshot t=%g clipped=%.3g", t, snapshots[-1].meta["clipped_fraction"])

    opts = seminorm_options or {}
    track = {k: [seminorm(k, s, **opts.get(k, {})) for s in snapshots] for k in seminorms}
    return TransportSolution(u0, times, snapshots, track, field.name, characteristics)


# -- weak formulation ---------------------------------------------------------


@dataclass(frozen=True)
class TestFunction:
    """phi(x) psi(t) with phi a smooth bump on B(center, radius) and psi(t) = 1 - (t/T)^2."""

    __test__ = False  # not a pytest class

    center: tuple
    radius: float
    T: float

    def phi(self, X) -> np.ndarray:
        q = np.sum((np.asarray(X) - np.asarray(self.center)) ** 2, axis=-1) / self.radius**2
        out = np.zeros_like(q)
        inside = q < 1.0
        out[inside] = np.exp(-1.0 / (1.0 - q[inside]))
        return out

    def grad_phi(self, X) -> np.ndarray:
        d = np.asarray(X) - np.asarray(self.center)
        q = np.sum(d * d, axis=-1) / self.radius**2
        coef = np.zeros_like(q)
        inside = q < 1.0
        coef[inside] = -2.0 * np.exp(-1.0 / (1.0 - q[inside])) / (self.radius**2 * (1.0 - q[inside]) ** 2)
        return coef[:, None] * d

    def psi(self, t):
        return 1.0 - (np.asarray(t, dtype=float) / self.T) ** 2

    def dpsi(self, t):
        return -2.0 * np.asarray(t, dtype=float) / self.T**2


def weak_residual(field: VectorField, solution: TransportSolution, test: TestFunction) -> float:
    """|int int u d_t(phi psi) + int u0 phi psi(0) + int int u div(b phi psi)|.

    Trapezoid rule over the snapshot times, midpoint rule over lattice cells,
    div(b phi) expanded as phi div b + b . grad phi.
    """
    times = solution.times
    if times[0] != 0.0 or not math.isclose(times[-1], test.T, rel_tol=1e-12):
        raise ValueError("snapshot times must run from 0 to the test function's T")
    grid = solution.snapshots[0]
    c = np.asarray(test.center, dtype=float)
    if np.any(c - test.radius < grid.lo) or np.any(c + test.radius > grid.hi):
        raise SupportError("test function support leaves the solution box")
    X = grid.nodes()
    phi = test.phi(X)
    mask = phi > 0
    X, phi = X[mask], phi[mask]
    gphi = test.grad_phi(X)
    vol = grid.cell_volume

    dt_term = np.empty(len(times))
    flux_term = np.empty(len(times))
    for k, t in enumerate(times):
        u = solution.snapshots[k].values.ravel()[mask]
        b = field(float(t), X)
        div = field.divergence(float(t), X)
        dt_term[k] = np.sum(u * phi) * vol * float(test.dpsi(t))
        flux_term[k] = np.sum(u * (phi * div + np.sum(b * gphi, axis=1))) * vol * float(test.psi(t))
    u0 = solution.snapshots[0].values.ravel()[mask]
    initial = np.sum(u0 * phi) * vol * float(test.psi(0.0))
    return abs(trapezoid(dt_term, times) + initial + trapezoid(flux_term, times))


def vmo_continuity_track(field: VectorField, u0: InitialDatum, times: Sequence[float], grid=None,
                         control: StepControl = DEFAULT_CONTROL):
    """Sup-norm differences of consecutive snapshots; also returns the solution."""
    sol = solve(field, u0, times, seminorms=(), grid=grid, control=control)
    diffs = np.array([np.max(np.abs(b.values - a.values)) for a, b in zip(sol.snapshots[:-1], sol.snapshots[1:])])
    return diffs, sol


# -- initial data catalog -------------------------------------------------------


def _gaussian(center=(0.5, 0.0), width=0.1):
    c = np.asarray(center, dtype=float)
    return lambda X: np.exp(-np.sum((X - c) ** 2, axis=1) / width)


def _log_abs():
    return lambda X: np.log(np.maximum(np.linalg.norm(X, axis=1), 1e-300))


def _disc_indicator(radius=0.5, center=(0.0, 0.0)):
    c = np.asarray(center, dtype=float)
    return lambda X: (np.linalg.norm(X - c, axis=1) <= radius).astype(float)


def _coordinate(axis=0):
    return lambda X: X[:, int(axis)].copy()


def _constant(value=1.0):
    return lambda X: np.full(X.shape[0], float(value))


INITIAL_DATA = {
    "gaussian": _gaussian,
    "log_abs": _log_abs,
    "disc_indicator": _disc_indicator,
    "coordinate": _coordinate,
    "constant": _constant,
}


def initial_datum(name: str, **params) -> Callable[[np.ndarray], np.ndarray]:
    """Named analytic initial datum, vectorised over points of shape (N, n)."""
    try:
        return INITIAL_DATA[name](**params)
    except KeyError:
        raise ValueError(f"unknown initial datum {name!r}; known: {sorted(INITIAL_DATA)}") from None
