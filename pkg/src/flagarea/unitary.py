"""Brownian motion on U(n) and flat complex Brownian motion.

The u(n) driver has off-diagonal entries b + i b' (b, b' independent with
variance dt) and purely imaginary diagonal entries i sqrt(2) g (var g = dt).
Steps are taken with the exponential map, U <- U exp(dA), which keeps U
unitary to rounding error and whose second-order term reproduces the Ito
drift -n U dt.

Everything accepts a leading batch axis so many paths can be advanced at once.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rng import block_streams

DEFAULT_DT = 1e-3
FLAG_MODULUS = 1e-4


@dataclass(frozen=True)
class SkewHermitianIncrement:
    entries: np.ndarray
    dt: float


@dataclass(frozen=True)
class UnitaryState:
    U: np.ndarray
    t: float = 0.0


@dataclass(frozen=True)
class FlatComplexPath:
    Z: np.ndarray
    t: float = 0.0


def fourier_matrix(n):
    """Normalized DFT matrix; every entry has modulus n^{-1/2}."""
    k = np.arange(n)
    return np.exp(2j * np.pi * np.outer(k, k) / n) / np.sqrt(n)


def unitarity_defect(U):
    """Frobenius norm of U*U - I (batched over leading axes)."""
    n = U.shape[-1]
    G = np.conj(np.swapaxes(U, -1, -2)) @ U
    return np.linalg.norm(G - np.eye(n), axis=(-2, -1))


def sample_increment(n, dt, rng, size=None):
    """Draw dA over a step of length dt; ``size`` adds leading batch axes."""
    if n < 2:
        raise ValueError("n must be at least 2")
    if dt <= 0:
        raise ValueError("dt must be positive")
    shape = () if size is None else ((size,) if np.isscalar(size) else tuple(size))
    iu = np.triu_indices(n, 1)
    m = len(iu[0])
    s = np.sqrt(dt)
    z = rng.standard_normal(shape + (m, 2)) * s
    g = rng.standard_normal(shape + (n,)) * s
    A = np.zeros(shape + (n, n), dtype=complex)
    upper = z[..., 0] + 1j * z[..., 1]
    A[..., iu[0], iu[1]] = upper
    A[..., iu[1], iu[0]] = -np.conj(upper)
    d = np.arange(n)
    A[..., d, d] = 1j * np.sqrt(2.0) * g
    return SkewHermitianIncrement(A, dt)


def _expm_pauli(A):
    # 2x2 case in closed form: -iA = a0 I + a.sigma
    H = -1j * A
    a0 = 0.5 * (H[..., 0, 0] + H[..., 1, 1]).real
    az = 0.5 * (H[..., 0, 0] - H[..., 1, 1]).real
    ax = H[..., 1, 0].real
    ay = H[..., 1, 0].imag
    r = np.sqrt(ax**2 + ay**2 + az**2)
    c = np.cos(r)
    sinc = np.where(r > 0, np.sin(r) / np.where(r > 0, r, 1.0), 1.0)
    ph = np.exp(1j * a0)
    out = np.empty(A.shape, dtype=complex)
    out[..., 0, 0] = ph * (c + 1j * sinc * az)
    out[..., 1, 1] = ph * (c - 1j * sinc * az)
    out[..., 0, 1] = ph * 1j * sinc * (ax - 1j * ay)
    out[..., 1, 0] = ph * 1j * sinc * (ax + 1j * ay)
    return out


def expm_skew(A):
    """exp(A) for skew-Hermitian A via the spectral decomposition of -iA."""
    if A.shape[-1] == 2:
        return _expm_pauli(A)
    w, V = np.linalg.eigh(-1j * A)
    return (V * np.exp(1j * w)[..., None, :]) @ np.conj(np.swapaxes(V, -1, -2))


def step_unitary(state, inc):
    U = state.U @ expm_skew(inc.entries)
    return UnitaryState(U, state.t + inc.dt)


def _n_steps(t_end, dt):
    if not (0 < dt <= t_end):
        raise ValueError("need 0 < dt <= t_end")
    return int(np.ceil(t_end / dt - 1e-9))


def iter_unitary(U0, t_end, dt, rng, paths=None):
    """Stream (t, U) after each step; U carries a batch axis when paths is set.

    The first item is the starting state.
    """
    U0 = np.asarray(U0, dtype=complex)
    n = U0.shape[-1]
    steps = _n_steps(t_end, dt)
    U = U0.copy() if paths is None else np.broadcast_to(U0, (paths, n, n)).copy()
    yield 0.0, U
    for k in range(1, steps + 1):
        inc = sample_increment(n, dt, rng, size=paths)
        U = U @ expm_skew(inc.entries)
        yield k * dt, U


def simulate_unitary_path(U0, t_end, dt, rng):
    """Whole path as a list of UnitaryState (start included)."""
    if isinstance(U0, UnitaryState):
        U0 = U0.U
    return [UnitaryState(U, t) for t, U in iter_unitary(U0, t_end, dt, rng)]


def simulate_unitary_batch(U0, t_end, dt, seed, paths, observe=None):
    """Advance ``paths`` independent copies; returns the final matrices.

    ``observe(start, t, U)`` is called after every step of every block, which
    lets callers accumulate functionals without storing paths.
    """
    n = np.asarray(U0).shape[-1]
    out = np.empty((paths, n, n), dtype=complex)
    for start, stop, rng in block_streams(seed, paths):
        for t, U in iter_unitary(U0, t_end, dt, rng, paths=stop - start):
            if observe is not None:
                observe(start, t, U)
        out[start:stop] = U
    return out


def near_singular(U, threshold=FLAG_MODULUS):
    """Flag states with some |U_nj| below threshold (kept, not rejected)."""
    return np.min(np.abs(U[..., -1, :]), axis=-1) < threshold


def iter_flat_complex(Z0, t_end, dt, rng, paths=None):
    Z0 = np.asarray(Z0, dtype=complex)
    if np.any(Z0 == 0):
        raise ValueError("every starting coordinate must be nonzero")
    steps = _n_steps(t_end, dt)
    shape = Z0.shape if paths is None else (paths,) + Z0.shape
    Z = np.broadcast_to(Z0, shape).copy()
    s = np.sqrt(dt)
    yield 0.0, Z
    for k in range(1, steps + 1):
        xi = rng.standard_normal(shape + (2,)) * s
        Z = Z + (xi[..., 0] + 1j * xi[..., 1])
        yield k * dt, Z


def simulate_flat_complex(Z0, t_end, dt, rng):
    """Euler path of a complex Brownian motion in C^n (exact in law)."""
    if isinstance(Z0, FlatComplexPath):
        Z0 = Z0.Z
    return [FlatComplexPath(Z, t) for t, Z in iter_flat_complex(Z0, t_end, dt, rng)]
