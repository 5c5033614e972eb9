"""Forward and backward flow maps of time-dependent vector fields.

Forward flow: phi_{s,t}(x) = x + int_s^t b(r, phi_{s,r}(x)) dr.
Backward flow: psi_{s,t}(x) = x - int_s^t b(r, psi_{r,t}(x)) dr, i.e. the ODE
dy/dr = b(r, y) run from r = t (y = x) down to r = s.  psi_{s,t} inverts
phi_{s,t}.

All seeds in a batch share one adaptive step sequence, so a batch is advanced
by a single map; this keeps differences between nearby seeds free of
step-selection noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import quad, simpson
from scipy.optimize import bisect

from .errors import (
    DegeneracyError,
    DomainError,
    FlowEscapeError,
    NumericError,
    StiffnessError,
    UnboundedGrowthError,
)
from .fields import VectorField, as_points, growth_functional
from .parallel import map_chunks


@dataclass(frozen=True)
class StepControl:
    """Richardson-controlled RK4: a step is accepted when one full step and two
    half steps differ by at most 15 * tol (max-norm over the whole batch)."""

    tol: float = 1e-9
    h0: Optional[float] = None
    h_min: float = 1e-12
    max_steps: int = 2_000_000

    def loosened(self, factor: float) -> "StepControl":
        return StepControl(self.tol * factor, self.h0, self.h_min, self.max_steps)


DEFAULT_CONTROL = StepControl()


def rk4_step(f, t, y, h):
    k1 = f(t, y)
    k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = f(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate(f, y0: np.ndarray, t0: float, t1: float, control: StepControl = DEFAULT_CONTROL,
              nodes: Optional[Sequence[float]] = None, record: bool = False):
    """Integrate y' = f(t, y) from t0 to t1 (either direction).

    Returns the final state, or ``(times, states)`` when ``record`` is set.  With
    ``nodes`` the recorded times are exactly those nodes (t0 and t1 included);
    otherwise every accepted step is recorded.
    """
    y = np.array(y0, dtype=float)
    span = t1 - t0
    if nodes is None:
        targets = [t1]
    else:
        targets = [float(v) for v in nodes]
        if targets[0] != t0:
            targets.insert(0, t0)
        if targets[-1] != t1:
            targets.append(t1)
        targets = targets[1:]
        if any((b - a) * span < 0 for a, b in zip([t0] + targets[:-1], targets)):
            raise ValueError("nodes must be monotone in the integration direction")
    times = [t0]
    states = [y.copy()] if record else None
    if span == 0:
        if record and nodes is not None:
            for tgt in targets:
                times.append(tgt)
                states.append(y.copy())
        return (np.array(times), np.array(states)) if record else y

    sign = 1.0 if span > 0 else -1.0
    h = sign * (abs(control.h0) if control.h0 else abs(span) / 4.0)
    t = t0
    steps = 0
    for target in targets:
        while (target - t) * sign > 0:
            remaining = target - t
            # a step lost to rounding in t would never advance: take the remainder
            truncated = abs(h) >= abs(remaining) or t + h == t
            hh = remaining if truncated else h
            full = rk4_step(f, t, y, hh)
            half = rk4_step(f, t, y, 0.5 * hh)
            half = rk4_step(f, t + 0.5 * hh, half, 0.5 * hh)
            err = float(np.max(np.abs(half - full))) / 15.0 if half.size else 0.0
            if not math.isfinite(err):
                raise NumericError(f"non-finite state near t={t:.6g}")
            if err > control.tol:
                h = 0.5 * hh
                if abs(h) < control.h_min * max(1.0, abs(t)):
                    raise StiffnessError(f"step size underflow at t={t:.6g}")
                continue
            y = half
            t = target if truncated else t + hh
            steps += 1
            if steps > control.max_steps:
                raise StiffnessError("maximum step count exceeded")
            if record and nodes is None:
                times.append(t)
                states.append(y.copy())
            if not truncated and err < control.tol / 64.0:
                h = 2.0 * hh
        if record and nodes is not None:
            times.append(t)
            states.append(y.copy())
    return (np.array(times), np.array(states)) if record else y


def _velocity_rhs(field: VectorField, offset: int = 0):
    n = field.dimension

    def rhs(t, Y):
        X = Y.reshape(-1, n)
        if field.domain is not None:
            inside = field.contains(X)
            if not np.all(inside):
                bad = int(np.argmin(inside))
                raise FlowEscapeError(offset + bad, t, X[bad].copy())
        return field(t, X).reshape(Y.shape)

    return rhs


def _augmented_rhs(field: VectorField, offset: int = 0):
    """State per seed: position (n), variational matrix M (n*n), scalar Jacobian J."""
    n = field.dimension
    vel = _velocity_rhs(field, offset)

    def rhs(t, Y):
        X = Y[:, :n]
        M = Y[:, n:n + n * n].reshape(-1, n, n)
        J = Y[:, -1]
        dX = vel(t, X)
        Db = field.jacobian(t, X)
        dM = Db @ M
        dJ = np.trace(Db, axis1=1, axis2=2) * J
        return np.concatenate([dX, dM.reshape(-1, n * n), dJ[:, None]], axis=1)

    return rhs


def _check_window(field: VectorField, s: float, t: float):
    if not (0.0 <= s <= t <= field.T):
        raise DomainError(f"need 0 <= s <= t <= T={field.T}, got s={s}, t={t}")


def flow_points(field: VectorField, t_from: float, t_to: float, X, control: StepControl = DEFAULT_CONTROL) -> np.ndarray:
    """Transport points along dy/dr = b(r, y) from time t_from to t_to (either order)."""
    X, single = as_points(X, field.dimension)
    out = map_chunks(lambda B, off: integrate(_velocity_rhs(field, off), B, t_from, t_to, control), X)
    return out[0] if single else out


def forward_points(field, s, t, X, control=DEFAULT_CONTROL):
    """phi_{s,t}(X)."""
    _check_window(field, s, t)
    return flow_points(field, s, t, X, control)


def backward_points(field, s, t, X, control=DEFAULT_CONTROL):
    """psi_{s,t}(X), the inverse of phi_{s,t}."""
    _check_window(field, s, t)
    return flow_points(field, t, s, X, control)


def flow_map(field: VectorField, s: float, t: float, direction: str = "forward",
             control: StepControl = DEFAULT_CONTROL) -> Callable[[np.ndarray], np.ndarray]:
    """The point map phi_{s,t} (or psi_{s,t}) as a vectorised callable."""
    if direction == "forward":
        return lambda X: forward_points(field, s, t, X, control)
    if direction == "backward":
        return lambda X: backward_points(field, s, t, X, control)
    raise ValueError("direction must be 'forward' or 'backward'")


@dataclass
class FlowTrajectory:
    seed: np.ndarray
    direction: str
    time_nodes: np.ndarray
    positions: np.ndarray
    jacobians: Optional[np.ndarray] = None
    jacobian_det: Optional[np.ndarray] = None  # scalar ODE dJ/dt = div b J

    @property
    def final(self) -> np.ndarray:
        return self.positions[-1]

    def dets(self) -> np.ndarray:
        if self.jacobians is None:
            raise ValueError("trajectory carries no Jacobians")
        return np.linalg.det(self.jacobians)


def _trajectories(field, t_from, t_to, seeds, control, nodes, direction, with_jacobian):
    X, _ = as_points(seeds, field.dimension)
    n = field.dimension
    if with_jacobian:
        Y0 = np.concatenate([X, np.tile(np.eye(n).ravel(), (X.shape[0], 1)), np.ones((X.shape[0], 1))], axis=1)
        rhs = _augmented_rhs(field)
    else:
        Y0 = X
        rhs = _velocity_rhs(field)
    times, states = integrate(rhs, Y0, t_from, t_to, control, nodes=nodes, record=True)
    trajs = []
    for i in range(X.shape[0]):
        S = states[:, i, :]
        tr = FlowTrajectory(X[i].copy(), direction, times, S[:, :n].copy())
        if with_jacobian:
            tr.jacobians = S[:, n:n + n * n].reshape(-1, n, n).copy()
            tr.jacobian_det = S[:, -1].copy()
        trajs.append(tr)
    return trajs


def integrate_forward(field: VectorField, s: float, t: float, seeds, step_control: StepControl = DEFAULT_CONTROL,
                      nodes=None, with_jacobian: bool = False) -> list[FlowTrajectory]:
    _check_window(field, s, t)
    return _trajectories(field, s, t, seeds, step_control, nodes, "forward", with_jacobian)


def integrate_backward(field: VectorField, s: float, t: float, seeds, step_control: StepControl = DEFAULT_CONTROL,
                       nodes=None, with_jacobian: bool = False) -> list[FlowTrajectory]:
    """Backward flow: time nodes run from t down to s; positions[-1] = psi_{s,t}(seed)."""
    _check_window(field, s, t)
    if nodes is not None:
        nodes = sorted(nodes, reverse=True)
    return _trajectories(field, t, s, seeds, step_control, nodes, "backward", with_jacobian)


def propagate_jacobian(field: VectorField, trajectory: FlowTrajectory,
                       step_control: StepControl = DEFAULT_CONTROL) -> FlowTrajectory:
    """Attach M(t) solving dM/dt = Db(t, x(t)) M, M = I at the first node.

    The path is re-integrated jointly with M and with the scalar equation
    dJ/dt = div b J, and must reproduce the recorded positions.
    """
    nodes = trajectory.time_nodes
    [tr] = _trajectories(field, nodes[0], nodes[-1], trajectory.seed[None, :], step_control,
                         list(nodes), trajectory.direction, True)
    drift = float(np.max(np.abs(tr.positions - trajectory.positions)))
    if drift > 1e3 * step_control.tol * max(1.0, float(np.max(np.abs(trajectory.positions)))):
        raise NumericError(f"re-integrated path drifts from the given trajectory by {drift:.3g}")
    return FlowTrajectory(trajectory.seed, trajectory.direction, nodes, trajectory.positions.copy(),
                          tr.jacobians, tr.jacobian_det)


def verify_inverse(field: VectorField, seeds, s: float, t: float, control: StepControl = DEFAULT_CONTROL) -> float:
    """max over seeds of |psi_{s,t}(phi_{s,t}(x)) - x|."""
    X, _ = as_points(seeds, field.dimension)
    Y = forward_points(field, s, t, X, control)
    Z = backward_points(field, s, t, Y, control)
    return float(np.max(np.linalg.norm(Z - X, axis=1)))


# -- a-priori bound ----------------------------------------------------------

OVERFLOW_RADIUS = 1e300


def _g_log(s: float) -> float:
    # G(e^s) = int_0^s e^v / (1 + v e^v) dv for s >= 0
    if s <= 0.0:
        return math.exp(s) - 1.0
    val, _ = quad(lambda v: 1.0 / (math.exp(-v) + v), 0.0, s, epsabs=1e-12, epsrel=1e-12, limit=200)
    return val


def bihari_G(u: float) -> float:
    """G(u) = int_1^u dr / (1 + r log+ r)."""
    if u <= 0:
        raise ValueError("G is defined for u > 0")
    return _g_log(math.log(u))


def bihari_G_inv(v: float, xtol: float = 1e-10) -> float:
    if v <= 0.0:
        u = 1.0 + v
        if u <= 0:
            raise ValueError("G^{-1} undefined below G(0+) = -1")
        return u
    hi = 1.0
    while _g_log(hi) < v:
        hi *= 2.0
        if hi > math.log(OVERFLOW_RADIUS):
            raise UnboundedGrowthError("a-priori radius exceeds the overflow threshold")
    s = bisect(lambda q: _g_log(q) - v, 0.0, hi, xtol=xtol)
    return math.exp(s + xtol)


def growth_integral(field: VectorField, t: float, sample_box=None, sample_count: int = 4096,
                    time_nodes: int = 65) -> float:
    """M(t) = int_0^t (sampled growth functional)(s) ds by Simpson's rule."""
    if t == 0:
        return 0.0
    n = field.dimension
    if sample_box is None:
        L = 16.0
        sample_box = (-L * np.ones(n), L * np.ones(n))
        if field.domain is not None:
            sample_box = (np.maximum(sample_box[0], field.domain[0]), np.minimum(sample_box[1], field.domain[1]))
    ts = np.linspace(0.0, t, time_nodes)
    vals = np.array([growth_functional(field, float(s), sample_box, sample_count) for s in ts])
    return float(simpson(vals, x=ts))


def apriori_radius_bound(field: VectorField, R: float, t: float, **kw) -> float:
    """G^{-1}(G(R) + M(t)) bounding |phi_s(x)| for |x| <= R and s <= t."""
    if not R > 0:
        raise ValueError("R must be positive")
    if not (0 <= t <= field.T):
        raise DomainError(f"time {t} outside [0, {field.T}]")
    M = growth_integral(field, t, **kw)
    if not math.isfinite(M):
        raise NumericError("growth functional is not finite")
    if M == 0.0:
        return float(R)
    return bihari_G_inv(bihari_G(R) + M)


# -- paired distortion ratio --------------------------------------------------


@dataclass
class PairRatioTrace:
    seed: np.ndarray
    y: np.ndarray
    z: np.ndarray
    time_nodes: np.ndarray
    ratios: np.ndarray
    rhs: np.ndarray
    A: np.ndarray = dc_field(repr=False, default=None)
    B: np.ndarray = dc_field(repr=False, default=None)

    def log_derivative(self) -> np.ndarray:
        """Centred differences of log H at interior nodes (uniform nodes assumed)."""
        lh = np.log(self.ratios)
        dt = np.diff(self.time_nodes)
        return (lh[2:] - lh[:-2]) / (dt[1:] + dt[:-1])

    def identity_error(self) -> float:
        """Max mismatch between d log H / dt and the recorded right-hand side."""
        return float(np.max(np.abs(self.log_derivative() - self.rhs[1:-1])))


def pair_ratio_trace(field: VectorField, x, y, z, t_end: float, n_nodes: int = 65,
                     control: StepControl = DEFAULT_CONTROL) -> PairRatioTrace:
    """H_{y,z}(t, x) = |A|/|B| with A = phi_t(x+y) - phi_t(x), B = phi_t(x+z) - phi_t(x)."""
    x, y, z = (np.asarray(v, dtype=float) for v in (x, y, z))
    ny, nz = np.linalg.norm(y), np.linalg.norm(z)
    if ny == 0 or not math.isclose(ny, nz, rel_tol=1e-12):
        raise ValueError("offsets must satisfy |y| = |z| > 0")
    _check_window(field, 0.0, t_end)
    nodes = np.linspace(0.0, t_end, n_nodes)
    times, states = integrate(_velocity_rhs(field), np.stack([x, x + y, x + z]), 0.0, t_end, control,
                              nodes=list(nodes), record=True)
    P0, Py, Pz = states[:, 0], states[:, 1], states[:, 2]
    A, B = Py - P0, Pz - P0
    nA, nB = np.linalg.norm(A, axis=1), np.linalg.norm(B, axis=1)
    if np.min(nA) < 1e-14 or np.min(nB) < 1e-14:
        raise DegeneracyError("paired trajectories collided")
    D = np.empty_like(A)
    E = np.empty_like(B)
    for k, tk in enumerate(times):
        b0 = field(tk, P0[k])
        D[k] = field(tk, Py[k]) - b0
        E[k] = field(tk, Pz[k]) - b0
    rhs = np.einsum("ki,ki->k", A, D) / nA**2 - np.einsum("ki,ki->k", B, E) / nB**2
    return PairRatioTrace(x, y, z, times, nA / nB, rhs, A, B)
