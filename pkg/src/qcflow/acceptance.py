"""Acceptance suite: ten closed-form or self-consistency checks with runtime budgets."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional, Sequence

import numpy as np

from . import biot_savart as bs
from .distortion import distortion_report
from .fields import (MollifierSpec, anticonformal_norms, builtin, dilation, disc_vortex, linear, modulated_shear,
                     mollify, rotation, shear)
from .flow import (DEFAULT_CONTROL, StepControl, apriori_radius_bound, forward_points, integrate_forward,
                   verify_inverse)
from .spaces import GridFunction, gagliardo_seminorm, seminorm, w1n_seminorm
from .transport import TestFunction, solve, weak_residual


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    measured: dict
    expected: str
    runtime: float = 0.0
    budget: float = math.inf
    error: Optional[str] = None

    @property
    def within_budget(self) -> bool:
        return self.runtime <= self.budget

    @property
    def ok(self) -> bool:
        return self.passed and self.within_budget and self.error is None

    def line(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        vals = ", ".join(f"{k}={_fmt(v)}" for k, v in self.measured.items())
        extra = f" error: {self.error}" if self.error else ""
        return (f"[{status}] {self.number:2d} {self.name:<16s} {vals} | expected {self.expected}"
                f" | {self.runtime:.1f}s (budget {self.budget:g}s){extra}")

    def to_dict(self) -> dict:
        return {"number": self.number, "name": self.name, "passed": self.ok, "measured": self.measured,
                "expected": self.expected, "runtime_s": round(self.runtime, 3), "budget_s": self.budget,
                "error": self.error}


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def _lattice(lo, hi, m):
    ax = np.linspace(lo, hi, m)
    return np.stack([g.ravel() for g in np.meshgrid(ax, ax, indexing="ij")], axis=1)


GOLDEN_SQ = (3 + 5**0.5) / 2


def shear_bound(control: StepControl = DEFAULT_CONTROL):
    rep, chk = distortion_report(shear(), (0.3, -0.2), 1.0, control=control)
    rel = abs(rep.H_estimate / GOLDEN_SQ - 1)
    ok = rel < 0.01 and chk.H_pass and abs(chk.H_margin - (math.e / GOLDEN_SQ - 1)) < 0.005
    return ok, {"H": rep.H_estimate, "rel_err": rel, "bound": chk.pointwise_bound, "margin": chk.H_margin}, \
        "H = (3+sqrt5)/2 within 1%, H <= e with margin ~3.8%"


def conformal(control: StepControl = DEFAULT_CONTROL):
    worst_h, worst_sa, worst_gap = 0.0, 0.0, 0.0
    probe = _lattice(-1.0, 1.0, 7)
    for f in (rotation(), dilation()):
        worst_sa = max(worst_sa, float(np.max(anticonformal_norms(f, 0.5, probe))), f.sa_sup(0.5))
        rep, chk = distortion_report(f, (0.3, -0.2), 1.0, control=control)
        worst_h = max(worst_h, abs(rep.H_estimate - 1))
        worst_gap = max(worst_gap, abs(chk.pointwise_bound - rep.H_estimate), abs(chk.uniform_bound - 1))
    ok = worst_sa == 0.0 and worst_h < 1e-6 and worst_gap < 1e-6
    return ok, {"max|S_A|": worst_sa, "max|H-1|": worst_h, "max bound gap": worst_gap}, \
        "S_A = 0, |H-1| < 1e-6, bound attained"


def inverse_flow(control: StepControl = DEFAULT_CONTROL):
    seeds = _lattice(-1.0, 1.0, 10)
    errs = {}
    for f in (shear(), rotation(), modulated_shear("sin")):
        errs[f.name] = max(verify_inverse(f, seeds, 0.0, t, control) for t in (0.5, 1.0, 2.0))
    worst = max(errs.values())
    return worst < 1e-7, {**errs, "max": worst}, "max |psi(phi(x)) - x| < 1e-7"


def jacobian(control: StepControl = DEFAULT_CONTROL):
    seeds = _lattice(-0.8, 0.8, 4)
    nodes = np.linspace(0.0, 1.0, 11)
    rel = 0.0
    for f in (dilation(), linear([[0.3, 1.0], [-0.4, -0.1]])):
        for tr in integrate_forward(f, 0.0, 1.0, seeds, control, nodes=nodes, with_jacobian=True):
            rel = max(rel, float(np.max(np.abs(tr.dets() / tr.jacobian_det - 1))))
    free = 0.0
    for f in (shear(), rotation(), modulated_shear("sin"), disc_vortex()):
        for tr in integrate_forward(f, 0.0, 1.0, seeds, control, nodes=nodes, with_jacobian=True):
            free = max(free, float(np.max(np.abs(tr.dets() - 1))), float(np.max(np.abs(tr.jacobian_det - 1))))
    return rel < 1e-6 and free < 1e-8, {"detM vs J rel": rel, "div-free |J-1|": free}, \
        "detM = J within 1e-6 rel; J = 1 within 1e-8 when div b = 0"


def _builtin_catalog():
    return [builtin("zero"), builtin("constant", c=(0.7, -0.4)), linear([[0.2, 1.0], [-0.5, 0.1]]),
            rotation(), dilation(), shear(), modulated_shear("sin"), modulated_shear("cos"), disc_vortex()]


def bihari(control: StepControl = DEFAULT_CONTROL):
    rng = np.random.default_rng(7)
    r = np.sqrt(rng.random(150))
    a = 2 * np.pi * rng.random(150)
    circ = np.linspace(0, 2 * np.pi, 50, endpoint=False)
    seeds = np.concatenate([np.stack([r * np.cos(a), r * np.sin(a)], 1), np.stack([np.cos(circ), np.sin(circ)], 1)])
    checkpoints = (0.5, 1.0, 1.5, 2.0)
    nodes = np.linspace(0.0, 2.0, 41)
    worst = -math.inf
    for f in _builtin_catalog():
        trs = integrate_forward(f, 0.0, 2.0, seeds, control, nodes=nodes)
        radii = np.max([np.linalg.norm(tr.positions, axis=1) for tr in trs], axis=0)
        for t in checkpoints:
            reach = float(np.max(radii[nodes <= t + 1e-12]))
            worst = max(worst, reach / apriori_radius_bound(f, 1.0, t))
    dil = [apriori_radius_bound(dilation(), 1.0, t) for t in checkpoints]
    dil_ok = all(math.isfinite(b) and b >= math.exp(t) for b, t in zip(dil, checkpoints))
    return worst <= 1.0 and dil_ok, {"max reach/bound": worst, "dilation bound @2": dil[-1], "e^2": math.exp(2)}, \
        "reach <= bound for all builtins; dilation bound >= e^t and finite"


MOLLIFIER_EPS = (0.2, 0.1, 0.05)


def _mollified_displacements(f, seeds, control):
    base = forward_points(f, 0.0, 1.0, seeds, control)
    return [float(np.max(np.linalg.norm(forward_points(mollify(f, MollifierSpec(e)), 0.0, 1.0, seeds, control)
                                        - base, axis=1))) for e in MOLLIFIER_EPS]


def _monotone(d, floor):
    d = np.maximum(d, floor)
    return bool(np.all(d[1:] <= 1.1 * d[:-1]))


def mollified(control: StepControl = DEFAULT_CONTROL):
    # shear is linear, so b_eps = b and the displacement sits at rounding level;
    # the disc vortex is Lipschitz but not C^1 and gives a nontrivial sequence
    floor = 10 * control.tol
    d_shear = _mollified_displacements(shear(), _lattice(-1.5, 1.5, 10), control)
    d_disc = _mollified_displacements(disc_vortex(), _lattice(-1.5, 1.5, 10), control)
    ok = _monotone(d_shear, floor) and _monotone(d_disc, floor) and d_disc[-1] < d_disc[0]
    return ok, {"shear": d_shear, "disc_vortex": d_disc, "noise floor": floor}, \
        "displacement nonincreasing in eps within 10%"


def log_abs(X):
    return np.log(np.maximum(np.linalg.norm(X, axis=1), 1e-300))


def bmo_transport(control: StepControl = DEFAULT_CONTROL, resolutions: Sequence[int] = (512, 1024)):
    times = (0.0, 0.5, 1.0, 2.0)
    sups = []
    for N in resolutions:
        sol = solve(shear(), log_abs, times, ("bmo",), grid=((-1, -1), (1, 1), N), control=control)
        sups.append(float(np.max(sol.seminorm_ratios("bmo")[1:])))
    change = abs(sups[-1] / sups[0] - 1)
    ok = all(math.isfinite(s) for s in sups) and change < 0.10
    return ok, {f"sup ratio @{N}": s for N, s in zip(resolutions, sups)} | {"change": change}, \
        "finite, change < 10% between resolutions"


def _gaussian_bump(X):
    return np.exp(-((X[:, 0] - 0.5) ** 2 + X[:, 1] ** 2) / 0.1)


def weak_residual_levels(characteristics: str, levels=((128, 32), (256, 64)), control: StepControl = DEFAULT_CONTROL):
    f = rotation().with_T(1.0)
    test = TestFunction((0.3, 0.3), 0.8, 1.0)
    out = []
    for N, nt in levels:
        src = GridFunction.from_function(_gaussian_bump, (-3, -3), (3, 3), int(1.5 * N))
        sol = solve(f, src, np.linspace(0.0, 1.0, nt + 1), (), grid=((-2, -2), (2, 2), N), control=control,
                    characteristics=characteristics, check_radius=False)
        out.append(weak_residual(f, sol, test))
    return out


def weak_solution(control: StepControl = DEFAULT_CONTROL):
    back = weak_residual_levels("backward", control=control)
    fwd = weak_residual_levels("forward", control=control)
    gain, ctrl = back[0] / back[1], fwd[0] / fwd[1]
    ok = gain >= 2.0 and ctrl < 1.2
    return ok, {"backward": back, "reduction": gain, "forward": fwd, "forward reduction": ctrl}, \
        "backward reduction >= 2; forward control does not decrease"


def seminorm_sanity(control: StepControl = DEFAULT_CONTROL):
    const = GridFunction((0, 0), (1, 1), np.full((32, 32), 3.7))
    zeros = {k: seminorm(k, const).value for k in ("bmo", "vmo", "w1n", "gagliardo")}
    u = GridFunction.from_function(lambda X: X[:, 0], (0, 0), (1, 1), 64)
    w = w1n_seminorm(u).value
    f = lambda X: np.sin(3 * X[:, 0]) * np.cos(2 * X[:, 1])
    g1 = gagliardo_seminorm(GridFunction.from_function(f, (0, 0), (1, 1), 24), 0.5, 4).value
    lam = 3.0
    g2 = gagliardo_seminorm(GridFunction.from_function(lambda X: f(X / lam), (0, 0), (lam, lam), 24), 0.5, 4).value
    dil = abs(g2 / g1 - 1)
    ok = all(v == 0.0 for v in zeros.values()) and abs(w - 1) < 1e-10 and dil < 1e-6
    return ok, {**{f"const {k}": v for k, v in zeros.items()}, "W12(x)": w, "gagliardo dilation": dil}, \
        "constants exactly 0; |W12(x) - 1| < 1e-10; dilation invariance 1e-6"


PROBE_RADII = (0.25, 0.5, 1.5, 2.0)


def disc_profile_error(N: int = 512, method: str = "auto", angles: int = 16) -> float:
    om = bs.disc_vorticity((-2.5, -2.5), (2.5, 2.5), N)
    v = bs.velocity_from_vorticity(om, method)
    vx, vy = om.with_values(v[..., 0]), om.with_values(v[..., 1])
    th = 2 * np.pi * np.arange(angles) / angles
    worst = 0.0
    for r in PROBE_RADII:
        P = np.stack([r * np.cos(th), r * np.sin(th)], 1)
        vt = (-P[:, 1] * vx(P) + P[:, 0] * vy(P)) / r
        exact = r / 2 if r <= 1 else 1 / (2 * r)
        worst = max(worst, float(np.max(np.abs(vt / exact - 1))))
    return worst


def radial_stationarity(N: int = 512, dt: float = 1e-3, steps: int = 100, sigma: float = 0.4) -> float:
    om = bs.gaussian_vorticity((-2.5, -2.5), (2.5, 2.5), N, [(0.0, 0.0)], sigma)
    states = bs.evolve_vorticity(om, dt, steps)
    return float(np.max(np.abs(states[-1].omega.values - om.values)) / np.max(np.abs(om.values)))


def biot_savart(control: StepControl = DEFAULT_CONTROL):
    prof = disc_profile_error()
    drift = radial_stationarity()
    return prof < 1e-2 and drift < 1e-3, {"disc v_theta rel err": prof, "radial drift": drift}, \
        "profile within 1e-2; drift < 1e-3 after 100 steps"


@dataclass(frozen=True)
class Criterion:
    number: int
    name: str
    fn: Callable
    budget: float


CRITERIA = [
    Criterion(1, "shear_bound", shear_bound, 5.0),
    Criterion(2, "conformal", conformal, 5.0),
    Criterion(3, "inverse_flow", inverse_flow, 10.0),
    Criterion(4, "jacobian", jacobian, 5.0),
    Criterion(5, "bihari", bihari, 5.0),
    Criterion(6, "mollified", mollified, 30.0),
    Criterion(7, "bmo_transport", bmo_transport, 120.0),
    Criterion(8, "weak_residual", weak_solution, 120.0),
    Criterion(9, "seminorm_sanity", seminorm_sanity, 60.0),
    Criterion(10, "biot_savart", biot_savart, 120.0),
]


def select(filter: Optional[str] = None) -> list[Criterion]:
    """Criteria whose name or number matches ``filter`` (comma separated); all when None."""
    if not filter:
        return list(CRITERIA)
    keys = {k.strip() for k in filter.split(",") if k.strip()}
    chosen = [c for c in CRITERIA if c.name in keys or str(c.number) in keys]
    unknown = keys - {c.name for c in chosen} - {str(c.number) for c in chosen}
    if unknown:
        raise KeyError(f"unknown criteria: {sorted(unknown)}")
    return chosen


def run_criterion(c: Criterion, control: StepControl = DEFAULT_CONTROL) -> CriterionResult:
    t0 = time.perf_counter()
    try:
        ok, measured, expected = c.fn(control)
        err = None
    except Exception as exc:  # a crash is a failed criterion, reported as such
        ok, measured, expected, err = False, {}, "", f"{type(exc).__name__}: {exc}"
    return CriterionResult(c.number, c.name, bool(ok), measured, expected, time.perf_counter() - t0, c.budget, err)


def run_acceptance_suite(filter: Optional[str] = None, control: StepControl = DEFAULT_CONTROL,
                         echo: Optional[Callable[[str], None]] = print) -> list[CriterionResult]:
    results = []
    for c in select(filter):
        r = run_criterion(c, control)
        results.append(r)
        if echo:
            echo(r.line())
    if echo:
        failed = [r.name for r in results if not r.ok]
        echo(f"{len(results) - len(failed)}/{len(results)} passed" + (f"; failing: {', '.join(failed)}" if failed else ""))
    return results
