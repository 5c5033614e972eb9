"""Command line entry point: scenario configs, the acceptance suite, and the
``solve`` / ``vorticity`` shortcuts.

Exit codes: 0 ok, 1 criterion or bound-check failure, 2 configuration error,
3 numeric error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from . import biot_savart as bs
from .acceptance import run_acceptance_suite
from .distortion import distortion_report
from .errors import ConfigError, CriterionFailure, QCFlowError
from .fields import BUILTINS, VectorField, builtin
from .flow import DEFAULT_CONTROL, StepControl, integrate_backward, integrate_forward, verify_inverse
from .gridio import read_field_grid, read_grid_function, write_grid_function
from .parallel import set_threads
from .spaces import GridFunction, seminorm
from .transport import INITIAL_DATA, TestFunction, initial_datum, solve, weak_residual

log = logging.getLogger("qcflow")

OPERATIONS = ("flow", "distortion", "transport", "spaces", "vorticity")
DEFAULT_TOLERANCES = {"integrator": DEFAULT_CONTROL.tol, "bound": 0.02, "inverse": 1e-7}


# -- loading ---------------------------------------------------------------------


def _num(x) -> str:
    return repr(float(x))


def _need(d: dict, key: str, where: str):
    if key not in d:
        raise ConfigError(f"{where}: missing required key {key!r}")
    return d[key]


def _path(p, base: Path) -> Path:
    p = Path(p)
    return p if p.is_absolute() else base / p


def load_field(spec, base: Path = Path("."), where: str = "field") -> VectorField:
    """A builtin name, a JSON descriptor, a QCF1 file, or a dict {builtin|file, params, T}."""
    if isinstance(spec, str):
        if spec in BUILTINS:
            spec = {"builtin": spec}
        elif spec.endswith(".json"):
            path = _path(spec, base)
            try:
                spec = json.loads(path.read_text())
            except FileNotFoundError:
                raise ConfigError(f"{where}: descriptor {path} not found") from None
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
            base = path.parent
        else:
            spec = {"file": spec}
    if not isinstance(spec, dict):
        raise ConfigError(f"{where}: expected a name or an object")
    if "builtin" in spec:
        f = builtin(spec["builtin"], **spec.get("params", {}))
    elif "file" in spec:
        path = _path(spec["file"], base)
        if not path.exists():
            raise ConfigError(f"{where}: field file {path} not found")
        f = read_field_grid(path)
    else:
        raise ConfigError(f"{where}: need 'builtin' or 'file'")
    if "T" in spec:
        T = float(spec["T"])
        if not T > 0:
            raise ConfigError(f"{where}.T: must be positive")
        f = f.with_T(T)
    return f


def _grid(spec: dict, where: str):
    g = _need(spec, "grid", where)
    lo = [float(v) for v in _need(g, "lo", f"{where}.grid")]
    hi = [float(v) for v in _need(g, "hi", f"{where}.grid")]
    res = _need(g, "resolution", f"{where}.grid")
    return lo, hi, res


def load_scalar(spec, base: Path, where: str, grid=None):
    """A QCG1 file path / {file} or an analytic datum {builtin, params}."""
    if isinstance(spec, str):
        spec = {"builtin": spec} if spec in INITIAL_DATA else {"file": spec}
    if "file" in spec:
        path = _path(spec["file"], base)
        if not path.exists():
            raise ConfigError(f"{where}: grid file {path} not found")
        return read_grid_function(path)
    if "builtin" in spec:
        try:
            return initial_datum(spec["builtin"], **spec.get("params", {}))
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"{where}: {exc}") from None
    raise ConfigError(f"{where}: need 'builtin' or 'file'")


def _check_times(times, field: VectorField, where: str):
    times = [float(t) for t in times]
    bad = [t for t in times if t < 0 or t > field.T]
    if bad:
        raise ConfigError(f"{where}: time {bad[0]:g} outside the field window [0, {field.T:g}]")
    return times


def _seeds(spec, n: int, rng: np.random.Generator, where: str) -> np.ndarray:
    if isinstance(spec, list):
        X = np.asarray(spec, dtype=float)
        if X.ndim != 2 or X.shape[1] != n:
            raise ConfigError(f"{where}: seeds must be a list of {n}-vectors")
        return X
    if isinstance(spec, dict) and "lattice" in spec:
        L = spec["lattice"]
        lo, hi, m = L["lo"], L["hi"], int(L["counts"])
        axes = [np.linspace(lo[k], hi[k], m) for k in range(n)]
        return np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)
    if isinstance(spec, dict) and "random" in spec:
        R = spec["random"]
        lo, hi = np.asarray(R["lo"], float), np.asarray(R["hi"], float)
        return lo + (hi - lo) * rng.random((int(R["count"]), n))
    raise ConfigError(f"{where}: seeds must be a list, {{lattice}} or {{random}}")


# -- writers -----------------------------------------------------------------------


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_num(v) if isinstance(v, (float, np.floating)) else v for v in r])


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def write_trajectories(path: Path, trajectories) -> None:
    """CSV rows (seed_id, t, x_1..x_n, M_11..M_nn, detM)."""
    n = trajectories[0].positions.shape[1]
    header = ["seed_id", "t"] + [f"x_{i + 1}" for i in range(n)]
    with_m = trajectories[0].jacobians is not None
    if with_m:
        header += [f"M_{i + 1}{j + 1}" for i in range(n) for j in range(n)] + ["detM"]
    rows = []
    for k, tr in enumerate(trajectories):
        dets = tr.dets() if with_m else None
        for i, t in enumerate(tr.time_nodes):
            row = [k, float(t)] + [float(v) for v in tr.positions[i]]
            if with_m:
                row += [float(v) for v in tr.jacobians[i].ravel()] + [float(dets[i])]
            rows.append(row)
    write_csv(path, header, rows)


# -- operations ----------------------------------------------------------------------


def op_flow(field, p, ctx):
    s = float(p.get("s", 0.0))
    t = float(_need(p, "t", ctx["where"]))
    _check_times([s, t], field, ctx["where"])
    X = _seeds(_need(p, "seeds", ctx["where"]), field.dimension, ctx["rng"], ctx["where"] + ".seeds")
    nodes = np.linspace(s, t, int(p.get("nodes", 11)))
    direction = p.get("direction", "forward")
    fn = integrate_forward if direction == "forward" else integrate_backward
    trajs = fn(field, s, t, X, ctx["control"], nodes=nodes, with_jacobian=bool(p.get("jacobian", True)))
    path = ctx["dir"] / "trajectories.csv"
    write_trajectories(path, trajs)
    inv = verify_inverse(field, X, s, t, ctx["control"])
    tol = float(p.get("inverse_tol", ctx["tol"]["inverse"]))
    if not tol > 0:
        raise ConfigError(f"{ctx['where']}.inverse_tol: must be positive")
    summary = {"seeds": int(X.shape[0]), "inverse_error": inv, "inverse_tol": tol}
    if trajs[0].jacobians is not None:
        summary["max_detM_vs_J"] = max(float(np.max(np.abs(tr.dets() / tr.jacobian_det - 1))) for tr in trajs)
    return inv < tol, summary, [path]


def op_distortion(field, p, ctx):
    t = float(_need(p, "t", ctx["where"]))
    _check_times([t], field, ctx["where"])
    points = np.atleast_2d(np.asarray(_need(p, "points", ctx["where"]), dtype=float))
    radii = p.get("radii", [1e-1, 1e-2, 1e-3, 1e-4])
    tol = float(p.get("tol", ctx["tol"]["bound"]))
    if not tol > 0:
        raise ConfigError(f"{ctx['where']}.tol: must be positive")
    records, rows = [], []
    for x in points:
        rep, chk = distortion_report(field, x, t, radii, int(p.get("directions", 360)), control=ctx["control"], tol=tol)
        records.append({**rep.to_dict(), "bounds": chk.to_dict()})
        rows.append([*map(float, x), t, rep.H_estimate, rep.K_estimate, chk.pointwise_bound, chk.uniform_bound,
                     chk.H_margin, int(chk.H_pass), int(chk.K_pass)])
    jpath, cpath = ctx["dir"] / "distortion.json", ctx["dir"] / "distortion.csv"
    write_json(jpath, records)
    n = field.dimension
    write_csv(cpath, [f"x_{i + 1}" for i in range(n)] + ["t", "H", "K", "pointwise_bound", "uniform_bound",
                                                         "H_margin", "H_pass", "K_pass"], rows)
    passed = all(r["bounds"]["passed"] for r in records)
    return passed, {"points": len(records), "passed": passed,
                    "min_H_margin": min(r["bounds"]["H_margin"] for r in records)}, [jpath, cpath]


def op_transport(field, p, ctx):
    times = _check_times(_need(p, "times", ctx["where"]), field, ctx["where"] + ".times")
    u0 = load_scalar(_need(p, "u0", ctx["where"]), ctx["base"], ctx["where"] + ".u0")
    grid = _grid(p, ctx["where"]) if "grid" in p or not isinstance(u0, GridFunction) else None
    kinds = p.get("seminorms", ["bmo"])
    sol = solve(field, u0, times, kinds, grid=grid, control=ctx["control"],
                sa_budget=p.get("sa_budget"), seminorm_options=p.get("seminorm_options"))
    arts = []
    for k, snap in enumerate(sol.snapshots):
        path = ctx["dir"] / f"u_{k:03d}.qcg"
        write_grid_function(path, snap)
        arts.append(path)
    rows = []
    for kind in kinds:
        ratios = sol.seminorm_ratios(kind) if sol.seminorm_track[kind][0].value else [float("nan")] * len(times)
        for t, r, q in zip(sol.times, sol.seminorm_track[kind], ratios):
            rows.append([float(t), r.kind, r.value, float(q)])
    cpath = ctx["dir"] / "seminorms.csv"
    write_csv(cpath, ["t", "kind", "value", "ratio"], rows)
    arts.append(cpath)
    summary = {"snapshots": len(sol.snapshots),
               "seminorm_track": {k: [r.value for r in v] for k, v in sol.seminorm_track.items()},
               "max_clipped_fraction": max(s.meta["clipped_fraction"] for s in sol.snapshots)}
    if "test_function" in p:
        tf = p["test_function"]
        test = TestFunction(tuple(tf["center"]), float(tf["radius"]), times[-1])
        summary["weak_residual"] = weak_residual(field, sol, test)
    return True, summary, arts


def op_spaces(field, p, ctx):
    u = load_scalar(_need(p, "u", ctx["where"]), ctx["base"], ctx["where"] + ".u")
    kinds = p.get("seminorms", ["bmo", "w1n"])
    opts = p.get("seminorm_options", {})
    if isinstance(u, GridFunction):
        grids = [u]
    else:
        lo, hi, res = _grid(p, ctx["where"])
        grids = [GridFunction.from_function(u, lo, hi, r) for r in (res if isinstance(res, list) else [res])]
    flow_t = p.get("flow_t")
    rows, summary = [], {}
    for g in grids:
        composed = None
        if flow_t is not None:
            _check_times([flow_t], field, ctx["where"] + ".flow_t")
            sol = solve(field, u if not isinstance(u, GridFunction) else g, [float(flow_t)], (),
                        grid=(g.lo, g.hi, g.resolution), control=ctx["control"], check_radius=False)
            composed = sol.snapshots[0]
        for kind in kinds:
            r = seminorm(kind, g, **opts.get(kind, {}))
            row = [r.kind, json.dumps(r.params, sort_keys=True), "x".join(map(str, r.resolution)), r.value]
            if composed is not None:
                c = seminorm(kind, composed, **opts.get(kind, {}))
                row += [c.value, c.value / r.value if r.value else float("nan")]
            rows.append(row)
            summary[f"{r.kind}@{row[2]}"] = r.value
    header = ["kind", "params", "resolution", "value"] + (["composed", "ratio"] if flow_t is not None else [])
    path = ctx["dir"] / "seminorms.csv"
    write_csv(path, header, rows)
    return True, summary, [path]


def initial_vorticity(spec, grid, base: Path, where: str) -> GridFunction:
    if isinstance(spec, str) and spec not in ("disc", "gaussians"):
        spec = {"file": spec}
    if isinstance(spec, str):
        spec = {"kind": spec}
    if "file" in spec:
        path = _path(spec["file"], base)
        if not path.exists():
            raise ConfigError(f"{where}: grid file {path} not found")
        return read_grid_function(path)
    lo, hi, res = grid
    kind = spec.get("kind")
    if kind == "disc":
        return bs.disc_vorticity(lo, hi, res, spec.get("radius", 1.0), spec.get("strength", 1.0))
    if kind == "gaussians":
        return bs.gaussian_vorticity(lo, hi, res, spec.get("centers", [(-0.4, 0.0), (0.4, 0.0)]),
                                     spec.get("sigma", 0.15), spec.get("amplitude", 1.0))
    raise ConfigError(f"{where}: omega0 must be 'disc', 'gaussians' or a file")


def run_vorticity(omega0: GridFunction, dt: float, steps: int, out: Path, save_every: Optional[int] = None,
                  method: str = "auto"):
    states = bs.evolve_vorticity(omega0, dt, steps, method)
    save_every = save_every or max(1, steps // 10)
    arts = []
    for k, st in enumerate(states):
        if k % save_every == 0 or k == steps:
            path = out / f"omega_{k:04d}.qcg"
            write_grid_function(path, st.omega)
            arts.append(path)
    diag = [st.diagnostics() for st in states]
    cpath = out / "diagnostics.csv"
    write_csv(cpath, ["t", "circulation", "max_abs_omega", "bmo"],
              [[d["t"], d["circulation"], d["max_abs_omega"], d["bmo"]] for d in diag])
    arts.append(cpath)
    c0 = diag[0]["circulation"]
    drift = abs(diag[-1]["circulation"] - c0) / abs(c0) if c0 else abs(diag[-1]["circulation"])
    return states, {"steps": steps, "circulation_drift": drift, "max_abs_omega": diag[-1]["max_abs_omega"]}, arts


def op_vorticity(field, p, ctx):
    grid = _grid(p, ctx["where"]) if "grid" in p else ((-2.5, -2.5), (2.5, 2.5), 256)
    om = initial_vorticity(_need(p, "omega0", ctx["where"]), grid, ctx["base"], ctx["where"] + ".omega0")
    _, summary, arts = run_vorticity(om, float(_need(p, "dt", ctx["where"])), int(_need(p, "steps", ctx["where"])),
                                     ctx["dir"], p.get("save_every"), p.get("method", "auto"))
    return True, summary, arts


OPS = {"flow": op_flow, "distortion": op_distortion, "transport": op_transport, "spaces": op_spaces,
       "vorticity": op_vorticity}


# -- scenarios ----------------------------------------------------------------------


def load_config(path) -> tuple[dict, bytes]:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found") from None
    try:
        cfg = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: top level must be an object")
    scen = cfg.get("scenarios", [])
    if not isinstance(scen, list):
        raise ConfigError(f"{path}: 'scenarios' must be a list")
    for i, s in enumerate(scen):
        where = f"scenarios[{i}]"
        if not isinstance(s, dict):
            raise ConfigError(f"{where}: must be an object")
        _need(s, "name", where)
        op = _need(s, "operation", where)
        if op not in OPERATIONS:
            raise ConfigError(f"{where}.operation: {op!r} is not one of {OPERATIONS}")
        if op != "vorticity":
            _need(s, "field", where)
    tols = {**DEFAULT_TOLERANCES, **cfg.get("tolerances", {})}
    for k, v in tols.items():
        if not (isinstance(v, (int, float)) and v > 0):
            raise ConfigError(f"tolerances.{k}: must be a positive number")
    cfg["tolerances"] = tols
    return cfg, raw


def run_scenarios(config_path, out: Path, seed: Optional[int] = None) -> tuple[int, dict]:
    """Run every scenario of a config; returns (exit status, manifest)."""
    cfg, raw = load_config(config_path)
    base = Path(config_path).parent
    seed = int(cfg.get("seed", 0) if seed is None else seed)
    tols = cfg["tolerances"]
    control = StepControl(tol=float(tols["integrator"]))
    # validate everything before producing output
    fields = []
    for i, s in enumerate(cfg["scenarios"]):
        fields.append(load_field(s["field"], base, f"scenarios[{i}].field") if "field" in s else None)
    out.mkdir(parents=True, exist_ok=True)
    entries, status = [], 0
    for i, (s, field) in enumerate(zip(cfg["scenarios"], fields)):
        d = out / str(s["name"])
        d.mkdir(parents=True, exist_ok=True)
        ctx = {"where": f"scenarios[{i}].params", "rng": np.random.default_rng([seed, i]), "control": control,
               "tol": tols, "dir": d, "base": base}
        try:
            passed, summary, arts = OPS[s["operation"]](field, s.get("params", {}), ctx)
        except KeyError as exc:
            raise ConfigError(f"{ctx['where']}: missing key {exc}") from None
        entries.append({"name": s["name"], "operation": s["operation"], "passed": bool(passed), "summary": summary,
                        "artifacts": [str(a.relative_to(out)) for a in arts]})
        if not passed:
            status = 1
    manifest = {"tool": "qcflow", "version": __version__, "config_sha256": hashlib.sha256(raw).hexdigest(),
                "seed": seed, "tolerances": tols, "scenarios": entries}
    write_json(out / "manifest.json", manifest)
    return status, manifest


# -- argparse -----------------------------------------------------------------------


def _floats(s: str) -> list[float]:
    try:
        return [float(v) for v in s.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {s!r}") from None


def _seed(s: str) -> int:
    v = int(s)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qcflow", description="Flows, transport and distortion experiments.")
    p.add_argument("--config", help="scenario JSON file")
    p.add_argument("--suite", action="store_true", help="run the acceptance suite")
    p.add_argument("--filter", help="criterion names or numbers, comma separated")
    p.add_argument("--out", default="qcflow-out", help="output directory")
    p.add_argument("--seed", type=_seed, help="PRNG seed (overrides the config)")
    p.add_argument("--threads", type=int, help="worker threads (default: $QCFLOW_THREADS or 1)")
    p.add_argument("--tol-factor", type=float, default=1.0, help="loosen the integrator tolerance of the suite")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command")

    s = sub.add_parser("solve", help="transport an initial datum")
    s.add_argument("--field", required=True, help="builtin name, descriptor .json or QCF1 file")
    s.add_argument("--u0", required=True, help=f"QCG1 file or one of {sorted(INITIAL_DATA)}")
    s.add_argument("--times", type=_floats, required=True)
    s.add_argument("--seminorms", default="bmo")
    s.add_argument("--box", type=_floats, default=[-1.0, 1.0], help="lo,hi per axis for analytic data")
    s.add_argument("--resolution", type=int, default=256)
    s.add_argument("--out", dest="sub_out")

    v = sub.add_parser("vorticity", help="frozen-velocity vorticity evolution")
    v.add_argument("--omega0", required=True, help="QCG1 file, 'disc' or 'gaussians'")
    v.add_argument("--dt", type=float, required=True)
    v.add_argument("--steps", type=int, required=True)
    v.add_argument("--box", type=_floats, default=[-2.5, 2.5])
    v.add_argument("--resolution", type=int, default=256)
    v.add_argument("--save-every", type=int)
    v.add_argument("--out", dest="sub_out")
    return p


def _cmd_solve(a, out: Path) -> int:
    field = load_field(a.field, Path("."), "--field")
    times = _check_times(a.times, field, "--times")
    kinds = [k for k in a.seminorms.split(",") if k]
    u0 = load_scalar(a.u0, Path("."), "--u0")
    n = field.dimension
    grid = None
    if not isinstance(u0, GridFunction):
        if len(a.box) != 2:
            raise ConfigError("--box takes lo,hi")
        grid = ([a.box[0]] * n, [a.box[1]] * n, a.resolution)
    ctx = {"where": "solve", "rng": None, "control": DEFAULT_CONTROL, "tol": DEFAULT_TOLERANCES, "dir": out,
           "base": Path(".")}
    out.mkdir(parents=True, exist_ok=True)
    p = {"times": times, "u0": a.u0, "seminorms": kinds}
    if grid:
        p["grid"] = {"lo": grid[0], "hi": grid[1], "resolution": grid[2]}
    _, summary, arts = op_transport(field, p, ctx)
    write_json(out / "manifest.json", {"tool": "qcflow", "version": __version__, "command": "solve",
                                       "field": a.field, "u0": a.u0, "times": times, "seminorms": kinds,
                                       "tolerances": {"integrator": DEFAULT_CONTROL.tol}, "summary": summary,
                                       "artifacts": [str(x.relative_to(out)) for x in arts]})
    return 0


def _cmd_vorticity(a, out: Path) -> int:
    if len(a.box) != 2:
        raise ConfigError("--box takes lo,hi")
    grid = ([a.box[0]] * 2, [a.box[1]] * 2, a.resolution)
    om = initial_vorticity(a.omega0, grid, Path("."), "--omega0")
    out.mkdir(parents=True, exist_ok=True)
    _, summary, arts = run_vorticity(om, a.dt, a.steps, out, a.save_every)
    write_json(out / "manifest.json", {"tool": "qcflow", "version": __version__, "command": "vorticity",
                                       "omega0": a.omega0, "dt": a.dt, "steps": a.steps, "summary": summary,
                                       "artifacts": [str(x.relative_to(out)) for x in arts]})
    return 0


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    a = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if a.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if a.threads is not None:
            if a.threads < 1:
                raise ConfigError("--threads must be >= 1")
            set_threads(a.threads)
        if a.command in ("solve", "vorticity"):
            out = Path(a.sub_out or a.out)
            return _cmd_solve(a, out) if a.command == "solve" else _cmd_vorticity(a, out)
        if a.suite:
            try:
                results = run_acceptance_suite(a.filter, DEFAULT_CONTROL.loosened(a.tol_factor))
            except KeyError as exc:
                raise ConfigError(str(exc)) from None
            if a.out:
                out = Path(a.out)
                out.mkdir(parents=True, exist_ok=True)
                write_json(out / "acceptance.json", {
                    "tool": "qcflow", "version": __version__, "seed": a.seed or 0,
                    "tolerances": {"integrator": DEFAULT_CONTROL.tol * a.tol_factor},
                    "criteria": [r.to_dict() for r in results]})
            failed = [r.name for r in results if not r.ok]
            if failed:
                raise CriterionFailure("failing criteria: " + ", ".join(failed))
            return 0
        if a.config:
            status, manifest = run_scenarios(a.config, Path(a.out), a.seed)
            for e in manifest["scenarios"]:
                print(f"[{'PASS' if e['passed'] else 'FAIL'}] {e['name']} ({e['operation']})")
            return status
        parser.print_help(sys.stderr)
        return 2
    except CriterionFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (QCFlowError, ArithmeticError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
