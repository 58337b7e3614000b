"""Flag-manifold coordinates, stochastic area and the radial simplex process.

Chart: w_kj = U_kj / U_nj (k < n), so each column j gives a point of C^{n-1}
and lambda_j = |U_nj|^2 = 1 / (1 + r_j^2) with r_j = |w_j|.

Area: d theta_j = -Im(conj(w_j) . dw_j) / (1 + r_j^2), summed Ito left-point.
Given the radial path, theta(t) is centred Gaussian with covariance t off the
diagonal and int (1 - lambda_j)/lambda_j on it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .rng import block_streams

CHART_EXIT = 1e-12
PSD_CLIP = 1e-8
PSD_FAIL = 1e-6


class ChartExitError(ArithmeticError):
    def __init__(self, index):
        super().__init__(f"|U_nj| below {CHART_EXIT:g} for column j={index}")
        self.index = index


class CovarianceError(ArithmeticError):
    pass


@dataclass(frozen=True)
class FlagPoint:
    w: np.ndarray  # (..., n-1, n), column j is w_j
    r: np.ndarray  # (..., n)


@dataclass
class AreaState:
    theta: np.ndarray
    diag_clock: np.ndarray
    t: float = 0.0
    under_resolved: int = 0


def project_to_flag(U):
    U = np.asarray(U)
    last = U[..., -1, :]
    small = np.abs(last) < CHART_EXIT
    if np.any(small):
        raise ChartExitError(int(np.nonzero(small.reshape(-1, small.shape[-1]))[1][0]))
    w = U[..., :-1, :] / last[..., None, :]
    r = np.sqrt(np.sum(np.abs(w) ** 2, axis=-2))
    return FlagPoint(w, r)


def lambda_from_U(U):
    return np.abs(np.asarray(U)[..., -1, :]) ** 2


def orthogonality_residual(fp):
    """max_{i<j} |w_i* w_j + 1|."""
    G = np.conj(np.swapaxes(fp.w, -1, -2)) @ fp.w
    n = G.shape[-1]
    iu = np.triu_indices(n, 1)
    return np.max(np.abs(G[..., iu[0], iu[1]] + 1), axis=-1)


class AreaAccumulator:
    """Streaming left-point integration of theta and the diagonal clocks.

    Feed successive FlagPoints (optionally batched) with ``push``.
    """

    def __init__(self, first, dt):
        self.dt = dt
        self.prev = first
        shape = first.r.shape
        self.theta = np.zeros(shape)
        self.diag_clock = np.zeros(shape)
        self.t = 0.0
        self.under_resolved = 0

    def push(self, fp):
        w0, r0 = self.prev.w, self.prev.r
        dw = fp.w - w0
        denom = 1 + r0**2
        self.theta -= np.sum(np.conj(w0) * dw, axis=-2).imag / denom
        self.diag_clock += r0**2 * self.dt
        self.under_resolved += int(np.count_nonzero(np.sqrt(np.sum(np.abs(dw) ** 2, axis=-2)) / denom > 1))
        self.t += self.dt
        self.prev = fp

    def state(self):
        return AreaState(self.theta.copy(), self.diag_clock.copy(), self.t, self.under_resolved)


def integrate_area(w_path, dt):
    """Area path along a sequence of FlagPoints (start included)."""
    w_path = list(w_path)
    acc = AreaAccumulator(w_path[0], dt)
    out = [acc.state()]
    for fp in w_path[1:]:
        acc.push(fp)
        out.append(acc.state())
    return out


def area_covariance(diag_clock, t):
    diag_clock = np.asarray(diag_clock, dtype=float)
    n = diag_clock.shape[-1]
    if n < 2:
        raise ValueError("n must be at least 2")
    S = np.full(diag_clock.shape + (n,), float(t))
    idx = np.arange(n)
    S[..., idx, idx] = diag_clock
    return S


def sample_area_given_radial(diag_clock, t, rng):
    """Centred Gaussian draw with the conditional area covariance (batched)."""
    S = area_covariance(diag_clock, t)
    if t == 0 and not np.any(diag_clock):
        return np.zeros(S.shape[:-1])
    ev, V = np.linalg.eigh(S)
    scale = np.max(np.abs(ev), axis=-1, keepdims=True)
    if np.any(ev < -PSD_FAIL * scale):
        raise CovarianceError("covariance has a substantially negative eigenvalue")
    ev = np.where(ev < PSD_CLIP * scale, np.maximum(ev, 0.0), ev)
    z = rng.standard_normal(S.shape[:-1])
    return np.einsum("...ij,...j->...i", V, np.sqrt(ev) * z)


def jacobi_drift_diffusion(lam):
    """Drift vector and antisymmetric coupling sqrt(lam_l lam_j)."""
    n = lam.shape[-1]
    drift = 2 * (1 - n * lam)
    root = np.sqrt(np.maximum(lam, 0.0))
    return drift, root[..., :, None] * root[..., None, :]


def jacobi_sde_step(lam, dt, rng, noise=True):
    """Euler step of the radial SDE, reflected at 0 and renormalised."""
    lam = np.asarray(lam, dtype=float)
    n = lam.shape[-1]
    drift, C = jacobi_drift_diffusion(lam)
    step = drift * dt
    if noise:
        iu = np.triu_indices(n, 1)
        g = np.zeros(lam.shape + (n,))
        z = rng.standard_normal(lam.shape[:-1] + (len(iu[0]),)) * np.sqrt(dt)
        g[..., iu[0], iu[1]] = z
        g[..., iu[1], iu[0]] = -z
        # d lambda_j gets 2 sum_l sqrt(lam_l lam_j) d gamma_{lj}
        step = step + 2 * np.sum(C * g, axis=-2)
    new = np.abs(lam + step)
    return new / np.sum(new, axis=-1, keepdims=True)


def simulate_jacobi_sde(lam0, t_end, dt, seed, paths):
    lam0 = np.asarray(lam0, dtype=float)
    steps = int(np.ceil(t_end / dt - 1e-9))
    out = np.empty((paths, lam0.size))
    for start, stop, rng in block_streams(seed, paths):
        lam = np.broadcast_to(lam0, (stop - start, lam0.size)).copy()
        for _ in range(steps):
            lam = jacobi_sde_step(lam, dt, rng)
        out[start:stop] = lam
    return out


def horizontal_lift_state(w, theta):
    """Matrix whose j-th column is e^{i theta_j} (w_j, 1) / sqrt(1 + |w_j|^2)."""
    if isinstance(w, FlagPoint):
        w = w.w
    w = np.asarray(w)
    theta = np.asarray(theta)
    ones = np.ones(w.shape[:-2] + (1, w.shape[-1]), dtype=complex)
    cols = np.concatenate([w, ones], axis=-2)
    norm = np.sqrt(np.sum(np.abs(cols) ** 2, axis=-2))
    return cols * (np.exp(1j * theta) / norm)[..., None, :]


def connection_increment(X0, X1):
    """Discrete connection form Im(conj(x_j) . dx_j) per column."""
    return np.sum(np.conj(X0) * X1, axis=-2).imag


def phase_area(U0, U1, dA):
    """Area increment read off the unitary path directly.

    U_nj = e^{i phi_j} sqrt(lambda_j) and phi_j - theta_j moves like the
    imaginary part of the diagonal driver, so d theta_j = d phi_j - Im dA_jj.
    """
    dphi = np.angle(U1[..., -1, :] / U0[..., -1, :])
    return dphi - np.diagonal(dA, axis1=-2, axis2=-1).imag


@dataclass
class UnitaryAreaRun:
    """Summary of a batch of unitary paths projected to the flag manifold."""

    lam: np.ndarray
    theta: np.ndarray
    diag_clock: np.ndarray
    theta_phase: np.ndarray = field(default=None)
    under_resolved: int = 0


def simulate_area(U0, t_end, dt, seed, paths, phase_route=False):
    """Unitary paths -> (lambda(t), theta(t), clocks) via integrate_area."""
    from .unitary import expm_skew, sample_increment

    U0 = np.asarray(U0, dtype=complex)
    n = U0.shape[-1]
    steps = int(np.ceil(t_end / dt - 1e-9))
    lam = np.empty((paths, n))
    theta = np.empty((paths, n))
    clock = np.empty((paths, n))
    phase = np.empty((paths, n)) if phase_route else None
    bad = 0
    for start, stop, rng in block_streams(seed, paths):
        m = stop - start
        U = np.broadcast_to(U0, (m, n, n)).copy()
        acc = AreaAccumulator(project_to_flag(U), dt)
        ph = np.zeros((m, n))
        for _ in range(steps):
            inc = sample_increment(n, dt, rng, size=m)
            U1 = U @ expm_skew(inc.entries)
            acc.push(project_to_flag(U1))
            if phase_route:
                ph += phase_area(U, U1, inc.entries)
            U = U1
        lam[start:stop] = lambda_from_U(U)
        theta[start:stop] = acc.theta
        clock[start:stop] = acc.diag_clock
        if phase_route:
            phase[start:stop] = ph
        bad += acc.under_resolved
    return UnitaryAreaRun(lam, theta, clock, phase, bad)
