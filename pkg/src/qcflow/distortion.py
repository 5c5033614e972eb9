"""Metric and analytic distortion of point maps, and the exponential bounds."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field as dc_field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import trapezoid

from .errors import DegeneracyError, NumericError, OrientationError
from .fields import VectorField, anticonformal_norms, sa_sup_norm
from .flow import DEFAULT_CONTROL, FlowTrajectory, StepControl, flow_map, integrate_forward

DEFAULT_RADII = (1e-1, 1e-2, 1e-3, 1e-4)


def direction_set(n: int, d: int) -> np.ndarray:
    """Unit vectors: equispaced on the circle (n=2), spherical Fibonacci lattice (n=3)."""
    if n == 2:
        if d < 8:
            raise ValueError("need at least 8 directions in the plane")
        a = 2 * np.pi * np.arange(d) / d
        return np.stack([np.cos(a), np.sin(a)], axis=1)
    if n == 3:
        if d < 26:
            raise ValueError("need at least 26 directions in space")
        k = np.arange(d) + 0.5
        z = 1 - 2 * k / d
        phi = np.pi * (1 + 5**0.5) * k
        rho = np.sqrt(1 - z * z)
        return np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=1)
    raise ValueError("direction sets exist for n = 2 or 3 only")


@dataclass
class DistortionReport:
    x: np.ndarray
    radii: np.ndarray
    ratios: np.ndarray
    H_estimate: Optional[float] = None
    converged: Optional[bool] = None
    oscillating: Optional[bool] = None
    K_estimate: Optional[float] = None
    pointwise_bound: Optional[float] = None
    uniform_bound: Optional[float] = None
    t: Optional[float] = None

    def to_dict(self) -> dict:
        d = asdict(self)
        return {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in d.items()}


def measure_ratios(phi: Callable[[np.ndarray], np.ndarray], x, radii: Sequence[float] = DEFAULT_RADII,
                   directions: int = 360) -> DistortionReport:
    """L(x, r) / l(x, r) per radius from max/min of |phi(x + r u) - phi(x)| over directions u."""
    x = np.asarray(x, dtype=float)
    radii = np.asarray(radii, dtype=float)
    if np.any(radii <= 0):
        raise ValueError("radii must be positive")
    U = direction_set(x.shape[0], directions)
    probes = x[None, None, :] + radii[:, None, None] * U[None, :, :]
    pts = np.concatenate([x[None, :], probes.reshape(-1, x.shape[0])])
    img = np.asarray(phi(pts))
    dist = np.linalg.norm(img[1:].reshape(len(radii), len(U), -1) - img[0], axis=2)
    lo = dist.min(axis=1)
    if np.any(lo < 1e-14):
        raise DegeneracyError("map collapses a probe sphere")
    return DistortionReport(x=x, radii=radii, ratios=dist.max(axis=1) / lo)


def extrapolate_H(report: DistortionReport) -> float:
    """Estimate limsup_{r->0} of the ratios.

    The converged tail is the run of smallest radii whose consecutive ratios
    agree within 1%; the estimate is its max, or the smallest-radius ratio when
    no such tail exists.
    """
    r, q = report.radii, report.ratios
    if len(r) < 3 or r.max() / r.min() < 100 * (1 - 1e-12):
        raise ValueError("need at least 3 radii spanning two decades")
    order = np.argsort(-r)
    q = q[order]
    rel = np.abs(np.diff(q)) / q[1:]
    j = len(q) - 1
    while j > 0 and rel[j - 1] < 0.01:
        j -= 1
    tail = q[j:]
    report.converged = len(tail) >= 2
    report.oscillating = bool(np.max(rel[-2:]) > 0.10)
    report.H_estimate = float(tail.max()) if report.converged else float(q[-1])
    return report.H_estimate


def analytic_K(phi: Callable[[np.ndarray], np.ndarray], x, h_fd: float = 1e-5) -> float:
    """|D phi(x)|^n / J_phi(x) from a central-difference D phi."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    E = h_fd * np.eye(n)
    img = np.asarray(phi(np.concatenate([x + E, x - E])))
    Dphi = ((img[:n] - img[n:]) / (2 * h_fd)).T
    det = float(np.linalg.det(Dphi))
    if not math.isfinite(det):
        raise NumericError("non-finite Jacobian")
    if det <= 0:
        raise OrientationError(f"Jacobian determinant {det:.3g} is not positive")
    return float(np.linalg.norm(Dphi, 2) ** n / det)


@dataclass
class BoundCheck:
    H_estimate: float
    K_estimate: float
    pointwise_bound: float
    uniform_bound: float
    tol: float
    H_pass: bool
    K_pass: bool
    H_margin: float
    K_margin: float

    @property
    def passed(self) -> bool:
        return self.H_pass and self.K_pass

    def to_dict(self) -> dict:
        return {**asdict(self), "passed": self.passed}


def verify_bounds(field: VectorField, report: DistortionReport, trajectory: FlowTrajectory,
                  tol: float = 0.02, lattice=None) -> BoundCheck:
    """Check H <= exp(int 2|S_A b(s, phi_s x)| ds) and K <= exp((n-1) int 2||S_A b(s,.)|| ds).

    Both integrals use the trapezoid rule over the trajectory's time nodes.
    """
    ts = trajectory.time_nodes
    pw = np.array([anticonformal_norms(field, float(s), p[None, :])[0] for s, p in zip(ts, trajectory.positions)])
    sup = np.array([sa_sup_norm(field, float(s), lattice) for s in ts])
    if not (np.all(np.isfinite(pw)) and np.all(np.isfinite(sup))):
        raise NumericError("non-finite anticonformal norm in bound quadrature")
    n = field.dimension
    pointwise = math.exp(trapezoid(2 * pw, ts))
    uniform = math.exp((n - 1) * trapezoid(2 * sup, ts))
    H = report.H_estimate if report.H_estimate is not None else extrapolate_H(report)
    K = report.K_estimate
    if K is None:
        raise ValueError("report has no K estimate; run analytic_K first")
    report.pointwise_bound, report.uniform_bound = pointwise, uniform
    return BoundCheck(
        H, K, pointwise, uniform, tol,
        H <= pointwise * (1 + tol), K <= uniform * (1 + tol),
        pointwise / H - 1.0, uniform / K - 1.0,
    )


def distortion_report(field: VectorField, x, t: float, radii: Sequence[float] = DEFAULT_RADII,
                      directions: int = 360, h_fd: float = 1e-5, n_nodes: int = 129,
                      control: StepControl = DEFAULT_CONTROL, tol: float = 0.02, lattice=None):
    """Measure H and K of phi_{0,t} at x and check both bounds; returns (report, check)."""
    phi = flow_map(field, 0.0, t, "forward", control)
    rep = measure_ratios(phi, x, radii, directions)
    extrapolate_H(rep)
    rep.K_estimate = analytic_K(phi, x, h_fd)
    rep.t = t
    [traj] = integrate_forward(field, 0.0, t, [x], control, nodes=np.linspace(0.0, t, n_nodes))
    return rep, verify_bounds(field, rep, traj, tol, lattice)


def report_json(rep: DistortionReport, check: Optional[BoundCheck] = None) -> str:
    d = rep.to_dict()
    if check is not None:
        d["bounds"] = check.to_dict()
    return json.dumps(d, indent=2, sort_keys=True)
