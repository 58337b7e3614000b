import numpy as np
import pytest
from scipy.linalg import expm

from flagarea.rng import stream
from flagarea.unitary import (
    expm_skew,
    fourier_matrix,
    iter_flat_complex,
    iter_unitary,
    sample_increment,
    simulate_flat_complex,
    simulate_unitary_batch,
    simulate_unitary_path,
    unitarity_defect,
)


def test_fourier_matrix_is_unitary_and_flat():
    for n in (2, 3, 5):
        F = fourier_matrix(n)
        assert unitarity_defect(F) < 1e-13
        assert np.allclose(np.abs(F) ** 2, 1 / n)


def test_increment_is_skew_hermitian():
    A = sample_increment(3, 1e-2, stream(0), size=50).entries
    assert np.abs(A + np.conj(np.swapaxes(A, -1, -2))).max() == 0


def test_increment_variances():
    dt = 1e-2
    A = sample_increment(3, dt, stream(1), size=200_000).entries
    se = dt * np.sqrt(2 / 200_000)
    assert abs(np.var(A[:, 0, 1].real) - dt) < 5 * se
    assert abs(np.var(A[:, 0, 1].imag) - dt) < 5 * se
    assert np.all(A[:, 1, 1].real == 0)
    # (i sqrt2 g)^2 has mean -2 dt
    m = np.mean(A[:, 1, 1] ** 2).real
    assert abs(m + 2 * dt) < 5 * 2 * dt * np.sqrt(2 / 200_000)


def test_increment_argument_checks():
    with pytest.raises(ValueError):
        sample_increment(1, 0.1, stream(0))
    with pytest.raises(ValueError):
        sample_increment(2, 0.0, stream(0))


@pytest.mark.parametrize("n", [2, 3, 4])
def test_expm_matches_scipy(n):
    A = sample_increment(n, 0.3, stream(n), size=8).entries
    E = expm_skew(A)
    for k in range(8):
        assert np.abs(E[k] - expm(A[k])).max() < 1e-12


def test_expm_pauli_zero():
    assert np.allclose(expm_skew(np.zeros((2, 2), dtype=complex)), np.eye(2))


@pytest.mark.parametrize("n", [2, 3])
def test_ito_drift(n):
    # E[U(dt)] from the identity is I - n dt I up to O(dt^2)
    dt, N = 1e-2, 100_000
    _, U = list(iter_unitary(np.eye(n), dt, dt, stream(5), paths=N))[-1]
    mean = U.mean(axis=0)
    se = np.sqrt(2 * n * dt / N)
    tol = 5 * se + (n * dt) ** 2
    assert np.abs(np.diag(mean) - (1 - n * dt)).max() < tol
    off = mean - np.diag(np.diag(mean))
    assert np.abs(off).max() < tol


def test_unitarity_preserved_long_path():
    U = simulate_unitary_batch(fourier_matrix(3), 10.0, 1e-3, seed=3, paths=8)
    assert unitarity_defect(U).max() < 1e-8


def test_path_starts_at_initial_state():
    path = simulate_unitary_path(fourier_matrix(2), 0.05, 0.01, stream(0))
    assert len(path) == 6
    assert path[0].t == 0 and np.allclose(path[0].U, fourier_matrix(2))
    assert path[-1].t == pytest.approx(0.05)


def test_batch_determinism():
    a = simulate_unitary_batch(fourier_matrix(3), 0.1, 1e-2, seed=11, paths=40)
    b = simulate_unitary_batch(fourier_matrix(3), 0.1, 1e-2, seed=11, paths=40)
    c = simulate_unitary_batch(fourier_matrix(3), 0.1, 1e-2, seed=12, paths=40)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_flat_complex_variance():
    t, N = 0.5, 50_000
    _, Z = list(iter_flat_complex(np.ones(2), t, 0.05, stream(2), paths=N))[-1]
    var = np.mean(np.abs(Z - 1) ** 2, axis=0)
    assert np.allclose(var, 2 * t, rtol=0.03)


def test_flat_complex_rejects_zero_start():
    with pytest.raises(ValueError):
        simulate_flat_complex(np.array([1.0, 0.0]), 1.0, 0.1, stream(0))
