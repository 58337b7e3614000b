import numpy as np
import pytest

from flagarea.experiments import spitzer_exact_cf
from flagarea.flag import AreaAccumulator, project_to_flag
from flagarea.rng import stream
from flagarea.unitary import fourier_matrix, iter_unitary, simulate_flat_complex
from flagarea.windings import (
    DeformationParams,
    NearZeroError,
    simulate_spitzer,
    simulate_winding_long,
    sphere_bm_skew,
    spitzer_functionals,
    unwrap_windings,
)


def _flag_path(n, t, dt, seed):
    pts, thetas = [], []
    acc = None
    for _, U in iter_unitary(fourier_matrix(n), t, dt, stream(seed)):
        fp = project_to_flag(U)
        if acc is None:
            acc = AreaAccumulator(fp, dt)
        else:
            acc.push(fp)
        pts.append(fp)
        thetas.append(acc.theta.copy())
    return pts, np.array(thetas)


def test_deformation_requires_positive_mu():
    with pytest.raises(ValueError):
        DeformationParams((1.0, 0.0))
    assert DeformationParams((1, 2)).mu == (1.0, 2.0)


def test_sphere_path_has_unit_norm_and_recovers_winding():
    pts, theta = _flag_path(3, 0.2, 1e-3, seed=2)
    states = sphere_bm_skew(pts, theta, (0.5, 1.0, 2.0), stream(3), 1e-3)
    X = np.array([s.X for s in states])
    assert np.abs(np.sum(np.abs(X) ** 2, axis=1) - 1).max() < 1e-8
    eta = np.array([s.eta for s in states])
    assert np.abs(unwrap_windings(X) - eta + eta[0] - np.mod(eta[0], 2 * np.pi)).max() < 1e-8


def test_unwrap_constant_and_rotation():
    c = np.array([0.6 + 0.8j])
    assert np.all(unwrap_windings(np.tile(c, (10, 1))) == np.angle(c) % (2 * np.pi))
    t = np.linspace(0, 1, 101)[:, None]
    eta = unwrap_windings(np.exp(4j * np.pi * t) * c)
    assert eta[-1, 0] - eta[0, 0] == pytest.approx(4 * np.pi, abs=1e-10)


def test_unwrap_flags_and_zero():
    X = np.exp(1j * np.array([[0.0], [2.0], [2.1]]))
    _, flagged = unwrap_windings(X, return_flags=True)
    assert flagged == 1
    with pytest.raises(NearZeroError):
        unwrap_windings(np.array([[1.0], [1e-8]]))


def test_spitzer_functionals_circle():
    s = np.linspace(0, 2 * np.pi, 10_001)
    Z = np.exp(1j * s)[:, None]
    out = spitzer_functionals(Z, s[1])
    # the left-point sum of sin(ds) undershoots 2 pi by O(ds^2)
    assert out[-1].zeta[0] == pytest.approx(2 * np.pi, abs=1e-6 * 2 * np.pi + 1e-6)
    assert out[-1].clock == pytest.approx(2 * np.pi)


def test_spitzer_functionals_refines_near_origin():
    path = simulate_flat_complex(np.array([0.03 + 0.0j]), 0.01, 1e-3, stream(4))
    out = spitzer_functionals(np.array([p.Z for p in path]), 1e-3, rng=stream(5))
    assert len(out) == len(path) and not out[-1].aborted


def test_spitzer_simulator_against_exact_law():
    t = 50.0
    zeta, clock = simulate_spitzer(np.ones(2, dtype=complex), t, seed=3, paths=4000)
    for nu in (0.5, 1.0, 2.0):
        emp = np.cos(nu * zeta[:, 1])
        se = emp.std(ddof=1) / np.sqrt(emp.size)
        assert abs(emp.mean() - spitzer_exact_cf(nu, 1.0, t)) < 4 * se
    assert np.all(clock > 0)


def test_spitzer_simulator_matches_euler_at_short_times():
    t, N = 1.0, 4000
    zeta, clock = simulate_spitzer(np.ones(2, dtype=complex), t, seed=6, paths=N)
    Z0 = np.full((N, 2), 1.0 + 0j)
    rng = stream(7)
    dt = 1e-3
    zeta_e = np.zeros((N, 2))
    clock_e = np.zeros(N)
    Z = Z0
    for _ in range(int(t / dt)):
        dZ = (rng.standard_normal((N, 2)) + 1j * rng.standard_normal((N, 2))) * np.sqrt(dt)
        zeta_e += np.angle((Z + dZ) / Z)
        clock_e += dt / np.sum(np.abs(Z) ** 2, axis=1)
        Z = Z + dZ
    tol = 4 * np.hypot(clock.std(), clock_e.std()) / np.sqrt(N)
    assert abs(clock.mean() - clock_e.mean()) < tol
    for nu in (0.5, 1.0):
        a, b = np.cos(nu * zeta[:, 0]), np.cos(nu * zeta_e[:, 0])
        assert abs(a.mean() - b.mean()) < 4 * np.hypot(a.std(), b.std()) / np.sqrt(N)


def test_exact_spitzer_cf_limits():
    assert spitzer_exact_cf(0.0, 1.0, 10.0) == pytest.approx(1.0, abs=1e-12)
    # Cauchy limit of 2 zeta / ln t
    t = np.exp(40.0)
    assert spitzer_exact_cf(2 / np.log(t), 1.0, t) == pytest.approx(np.exp(-1), abs=0.02)


def test_long_windings_shape_and_determinism():
    a = simulate_winding_long(2, 1.0, (1.0, 2.0), seed=1, paths=50)
    b = simulate_winding_long(2, 1.0, (1.0, 2.0), seed=1, paths=50)
    assert a.shape == (50, 2) and np.array_equal(a, b)
