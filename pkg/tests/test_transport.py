import math

import numpy as np
import pytest

from qcflow import transport
from qcflow.errors import DomainError, InconsistencyError, SupportError
from qcflow.fields import builtin, rotation, shear
from qcflow.flow import backward_points
from qcflow.spaces import GridFunction, nodes
from qcflow.transport import TestFunction, initial_datum, solve, vmo_continuity_track, weak_residual

GRID = ((-2, -2), (2, 2), 64)


def bump(X):
    return np.exp(-8 * np.sum((X - np.array([0.4, 0.1])) ** 2, axis=1))


def test_zero_field_leaves_data_unchanged():
    sol = solve(builtin("zero"), bump, [0.0, 0.5, 1.0], grid=GRID)
    for s in sol.snapshots:
        assert np.array_equal(s.values, sol.snapshots[0].values)
    assert np.allclose(sol.seminorm_ratios("bmo"), 1.0)
    test = TestFunction((0.0, 0.0), 1.0, 1.0)
    assert weak_residual(builtin("zero"), sol, test) < 1e-15


def test_rotation_matches_rotated_datum():
    t = 0.7
    sol = solve(rotation(), bump, [t], seminorms=(), grid=GRID)
    X = nodes(*GRID[:2], (64, 64))
    c, s = math.cos(t), math.sin(t)
    back = X @ np.array([[c, -s], [s, c]])  # rotate by -t
    assert np.allclose(sol.snapshots[0].values.ravel(), bump(back), atol=1e-7)


def test_shear_of_grid_datum_against_callable():
    u0 = GridFunction.from_function(bump, (-3, -3), (3, 3), 256)
    sol = solve(shear(), u0, [0.5], seminorms=(), grid=GRID)
    X = nodes(*GRID[:2], (64, 64))
    exact = bump(X - np.stack([0.5 * X[:, 1], 0 * X[:, 1]], 1))
    assert np.abs(sol.snapshots[0].values.ravel() - exact).max() < 5e-3


def test_backward_beats_forward_characteristics():
    test = TestFunction((0.3, 0.3), 0.8, 1.0)
    times = np.linspace(0, 1, 21)
    good = solve(rotation(), bump, times, seminorms=(), grid=GRID)
    bad = solve(rotation(), bump, times, seminorms=(), grid=GRID, characteristics="forward")
    assert weak_residual(rotation(), good, test) * 10 < weak_residual(rotation(), bad, test)
    with pytest.raises(ValueError):
        solve(rotation(), bump, times, grid=GRID, characteristics="sideways")


def test_time_checks():
    with pytest.raises(DomainError):
        solve(shear(T=1.0), bump, [0.0, 2.0], grid=GRID)
    with pytest.raises(DomainError):
        solve(shear(), bump, [-0.1], grid=GRID)
    with pytest.raises(ValueError):
        solve(shear(), bump, [0.0])
    sol = solve(shear(), bump, [0.0, 0.5], seminorms=(), grid=GRID)
    with pytest.raises(ValueError):
        weak_residual(shear(), sol, TestFunction((0, 0), 0.5, 1.0))
    with pytest.raises(KeyError):
        sol.snapshot(0.25)
    assert sol.snapshot(0.5) is sol.snapshots[1]


def test_radius_violation_is_inconsistency(monkeypatch):
    monkeypatch.setattr(transport, "apriori_radius_bound", lambda *a, **k: 0.5)
    with pytest.raises(InconsistencyError):
        solve(rotation(), bump, [0.0, 0.5], grid=GRID)


def test_sa_budget_warning():
    with pytest.warns(UserWarning):
        solve(shear(), bump, [0.0, 0.5], seminorms=(), grid=GRID, sa_budget=0.1)


def test_test_function_support_must_fit():
    sol = solve(shear(), bump, [0.0, 1.0], seminorms=(), grid=GRID)
    with pytest.raises(SupportError):
        weak_residual(shear(), sol, TestFunction((1.5, 0.0), 0.8, 1.0))


def test_test_function_gradient():
    test = TestFunction((0.1, -0.2), 0.7, 1.0)
    X = np.random.default_rng(3).uniform(-0.5, 0.5, (30, 2))
    h = 1e-6
    fd = np.stack([(test.phi(X + h * e) - test.phi(X - h * e)) / (2 * h) for e in np.eye(2)], 1)
    assert np.allclose(test.grad_phi(X), fd, atol=1e-8)
    assert test.psi(1.0) == 0.0 and test.dpsi(0.0) == 0.0


def test_vmo_continuity_track_shrinks_with_step():
    coarse, _ = vmo_continuity_track(rotation(), bump, np.linspace(0, 1, 5), grid=GRID)
    fine, _ = vmo_continuity_track(rotation(), bump, np.linspace(0, 1, 9), grid=GRID)
    assert fine.max() < coarse.max()


def test_initial_data_catalog():
    X = np.array([[0.5, 0.0], [3.0, 4.0]])
    assert initial_datum("gaussian")(X)[0] == 1.0
    assert initial_datum("log_abs")(X)[1] == pytest.approx(math.log(5.0))
    assert list(initial_datum("disc_indicator", radius=1.0)(X)) == [1.0, 0.0]
    assert list(initial_datum("coordinate", axis=1)(X)) == [0.0, 4.0]
    with pytest.raises(ValueError):
        initial_datum("sawtooth")


def test_rotating_a_coordinate_at_quarter_turn():
    sol = solve(rotation(), initial_datum("coordinate"), [math.pi / 2], seminorms=(), grid=((-1, -1), (1, 1), 512))
    X = nodes((-1, -1), (1, 1), (512, 512))
    assert np.abs(sol.snapshots[0].values.ravel() - X[:, 1]).max() < 1e-3


def test_sheared_log_keeps_bounded_oscillation():
    sol = solve(shear(), initial_datum("log_abs"), [0.0, 1.0], grid=((-1, -1), (1, 1), 512))
    ratio = sol.seminorm_ratios("bmo")[-1]
    assert math.isfinite(ratio) and ratio <= 4


def test_zero_field_residual_at_256():
    times = np.linspace(0, 1, 17)
    sol = solve(builtin("zero"), bump, times, seminorms=(), grid=((-2, -2), (2, 2), 256))
    assert weak_residual(builtin("zero"), sol, TestFunction((0.2, 0.0), 1.0, 1.0)) < 1e-6


def test_shear_continuity_is_lipschitz_times_displacement():
    times = np.linspace(0, 1, 11)
    diffs, sol = vmo_continuity_track(shear(), bump, times, grid=GRID)
    X = nodes(*GRID[:2], (64, 64))
    feet = [backward_points(shear(), 0.0, float(t), X) for t in times]
    step = max(np.linalg.norm(b - a, axis=1).max() for a, b in zip(feet, feet[1:]))
    lip = 4 * math.exp(-0.5)  # max |grad exp(-8 r^2)|
    assert np.all(diffs <= lip * step * (1 + 1e-9))


def test_rotation_leaves_radial_data_alone():
    diffs, _ = vmo_continuity_track(rotation(), lambda X: np.exp(-np.sum(X * X, 1)), np.linspace(0, 1, 5), grid=GRID)
    assert diffs.max() < 1e-8
