import math

import numpy as np
import pytest

from qcflow.biot_savart import (
    check_support, discrete_divergence, disc_vorticity, evolve_vorticity, gaussian_vorticity, kernel,
    stream_function, velocity_at, velocity_from_vorticity,
)
from qcflow.errors import DomainError, StepSizeError, SupportError
from qcflow.spaces import GridFunction

BOX = ((-2.5, -2.5), (2.5, 2.5))


def blob(N, centers=((0.3, -0.2),), sigma=0.3):
    return gaussian_vorticity(*BOX, N, centers, sigma)


def test_kernel_is_a_rotated_gradient_of_the_log():
    d = np.array([[1.0, 0.0], [0.0, 2.0], [0.0, 0.0]])
    assert np.allclose(kernel(d), [[0, 1 / (2 * np.pi)], [-1 / (4 * np.pi), 0], [0, 0]])


def test_zero_vorticity_gives_zero_velocity():
    om = GridFunction(*BOX, np.zeros((32, 32)))
    for form in ("kernel", "stream"):
        assert not velocity_from_vorticity(om, form=form).any()


@pytest.mark.parametrize("form", ["kernel", "stream"])
def test_direct_and_fft_sums_agree(form):
    om = blob(48)
    a = velocity_from_vorticity(om, "direct", form=form)
    b = velocity_from_vorticity(om, "fft", form=form)
    assert np.abs(a - b).max() < 1e-8 * np.abs(a).max()


def test_velocity_at_matches_lattice():
    om = blob(32)
    v = velocity_from_vorticity(om, "direct")
    X = om.nodes()[[5, 300, 777]]
    assert np.allclose(velocity_at(om, X), v.reshape(-1, 2)[[5, 300, 777]], atol=1e-14)


def test_reflection_symmetry():
    # odd omega in x1 gives v1 odd and v2 even; even omega gives the reverse
    odd = GridFunction.from_function(lambda X: X[:, 0] * np.exp(-10 * np.sum(X * X, 1)), *BOX, 64)
    even = GridFunction.from_function(lambda X: np.exp(-10 * np.sum((X - [0, 0.3]) ** 2, 1)), *BOX, 64)
    vo = velocity_from_vorticity(odd, "fft")
    ve = velocity_from_vorticity(even, "fft")
    flip = lambda a: a[::-1, :]
    tol = 1e-12 * np.abs(vo).max()
    assert np.abs(flip(vo[..., 0]) + vo[..., 0]).max() < tol
    assert np.abs(flip(vo[..., 1]) - vo[..., 1]).max() < tol
    tol = 1e-12 * np.abs(ve).max()
    assert np.abs(flip(ve[..., 0]) - ve[..., 0]).max() < tol
    assert np.abs(flip(ve[..., 1]) + ve[..., 1]).max() < tol


def test_uniform_disc_profile():
    om = disc_vorticity(*BOX, 256)
    v = velocity_from_vorticity(om)
    vx, vy = om.with_values(v[..., 0]), om.with_values(v[..., 1])
    th = np.linspace(0, 2 * np.pi, 12, endpoint=False)
    for r in (0.25, 0.5, 1.5, 2.0):
        P = np.stack([r * np.cos(th), r * np.sin(th)], 1)
        vt = (-P[:, 1] * vx(P) + P[:, 0] * vy(P)) / r
        exact = r / 2 if r <= 1 else 1 / (2 * r)
        assert np.abs(vt / exact - 1).max() < 1e-2


def test_support_band():
    with pytest.raises(SupportError):
        check_support(gaussian_vorticity((-1, -1), (1, 1), 64, [(0, 0)], 0.3))
    check_support(blob(64))
    with pytest.raises(SupportError):
        velocity_from_vorticity(disc_vorticity((-1.05, -1.05), (1.05, 1.05), 64))


def test_argument_checks():
    with pytest.raises(ValueError):
        velocity_from_vorticity(blob(16), form="vector_potential")
    with pytest.raises(ValueError):
        velocity_from_vorticity(blob(16), method="multipole")
    with pytest.raises(ValueError):
        velocity_from_vorticity(GridFunction((0, 0, 0), (1, 1, 1), np.zeros((4, 4, 4))))


def test_stream_form_is_discretely_divergence_free():
    om = blob(128)
    v = velocity_from_vorticity(om, form="stream")
    div = discrete_divergence(v, om.spacing)
    assert np.abs(div).max() < 1e-6 * np.abs(v).max()


def test_kernel_form_divergence_is_second_order():
    errs = []
    for N in (64, 128, 256):
        om = blob(N)
        v = velocity_from_vorticity(om)
        errs.append(np.abs(discrete_divergence(v, om.spacing)).max() / np.abs(v).max())
    rates = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    assert all(r > 1.8 for r in rates)


def test_stream_function_of_point_mass_far_field():
    om = GridFunction.from_function(lambda X: (np.abs(X).max(1) < 0.1).astype(float), *BOX, 50)
    psi = stream_function(om)
    mass = om.values.sum() * om.cell_volume
    P = np.array([[2.2, 0.0], [0.0, -2.3]])
    assert np.allclose(psi(P), mass * np.log(np.linalg.norm(P, axis=1)) / (2 * np.pi), rtol=2e-3)


# -- evolution -----------------------------------------------------------------------


def test_zero_stays_zero():
    om = GridFunction(*BOX, np.zeros((32, 32)))
    states = evolve_vorticity(om, 0.1, 3)
    assert all(not s.omega.values.any() for s in states)


def test_evolution_diagnostics():
    om = blob(128, centers=((0.3, 0.0), (-0.3, 0.1)))
    states = evolve_vorticity(om, 0.01, 30)
    circ = [s.circulation() for s in states]
    assert abs(circ[-1] - circ[0]) < 1e-3 * abs(circ[0])
    # interpolation obeys the maximum principle; only the circulation fixer can lift the peak
    for a, b in zip(states, states[1:]):
        assert b.max_abs() <= a.max_abs() * b.fixer * (1 + 1e-12)
        assert abs(b.fixer - 1) < 1e-3
    d = states[-1].diagnostics()
    assert set(d) == {"t", "circulation", "max_abs_omega", "bmo"}
    assert d["t"] == pytest.approx(0.3)


def test_plain_interpolation_leaks_circulation():
    om = blob(64, centers=((0.3, 0.0), (-0.3, 0.1)))
    states = evolve_vorticity(om, 0.01, 30, method="fft", conserve=False)
    peaks = [s.max_abs() for s in states]
    assert all(b <= a * (1 + 1e-12) for a, b in zip(peaks, peaks[1:]))
    assert all(s.fixer == 1.0 for s in states)
    assert states[-1].circulation() < states[0].circulation()


def test_dipole_skips_the_fixer():
    om = GridFunction.from_function(
        lambda X: np.exp(-12 * np.sum((X - [0.3, 0]) ** 2, 1)) - np.exp(-12 * np.sum((X + [0.3, 0]) ** 2, 1)), *BOX, 64)
    states = evolve_vorticity(om, 0.01, 5, method="fft")
    assert all(s.fixer == 1.0 for s in states)


def test_step_size_and_window_checks():
    om = blob(64)
    with pytest.raises(StepSizeError):
        evolve_vorticity(om, 10.0, 1)
    with pytest.raises(DomainError):
        evolve_vorticity(om, 0.1, 11, T=1.0)
    with pytest.raises(ValueError):
        evolve_vorticity(om, 0.0, 1)


def _centroids(om, axis):
    X = om.nodes()
    w = om.values.ravel()
    side = X @ axis > 0
    return [np.sum(X[m] * w[m, None], 0) / w[m].sum() for m in (side, ~side)]


def test_two_vortices_co_rotate():
    om = gaussian_vorticity((-1.5, -1.5), (1.5, 1.5), 128, [(0.4, 0.0), (-0.4, 0.0)], 0.15, 10.0)
    states = evolve_vorticity(om, 0.01, 100)
    axis = np.array([1.0, 0.0])
    angles, seps = [], []
    for s in states[::10]:
        a, b = _centroids(s.omega, axis)
        axis = (a - b) / np.linalg.norm(a - b)
        angles.append(math.atan2(axis[1], axis[0]))
        seps.append(np.linalg.norm(a - b))
    angles = np.unwrap(angles)
    assert np.all(np.diff(angles) > 0)  # positive vorticity turns counterclockwise
    assert abs(seps[-1] / seps[0] - 1) < 0.02
    assert abs(states[-1].circulation() / states[0].circulation() - 1) < 1e-3
    # point vortices of circulation G at distance d turn at G / (pi d^2)
    G = 10.0 * math.pi * 0.15**2
    rate = (angles[-1] - angles[0]) / 1.0
    assert rate == pytest.approx(G / (math.pi * seps[0] ** 2), rel=0.1)
