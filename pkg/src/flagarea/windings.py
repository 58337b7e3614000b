"""Windings on deformed spheres and Spitzer functionals of flat Brownian motion.

Sphere: X_j = e^{i(mu_j beta_j + theta_j)} / sqrt(1 + |w_j|^2) with beta an
independent flat Brownian motion, so the winding of X_j is mu_j beta_j + theta_j.

Flat: for Z in C^n, zeta_j winds Z_j around 0 and the clock is
int ds / |Z|^2.  Each coordinate is a planar Brownian motion, whose log-modulus
and argument are independent standard Brownian motions in the clock
int ds / |Z_j|^2.  The fast simulator uses that representation whenever a
coordinate is small compared with the step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .flag import FlagPoint, sample_area_given_radial
from .radial import path_seeds, simulate_radial_clock
from .rng import stream

SUBSTEP_MODULUS = 0.05
ZERO_MODULUS = 1e-6


class NearZeroError(ArithmeticError):
    pass


@dataclass(frozen=True)
class DeformationParams:
    mu: tuple

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        if mu.ndim != 1 or np.any(~np.isfinite(mu)) or np.any(mu <= 0):
            raise ValueError("mu must be a vector of positive reals")
        object.__setattr__(self, "mu", tuple(float(m) for m in mu))


@dataclass
class SpherePathState:
    X: np.ndarray
    eta: np.ndarray
    rho: np.ndarray


@dataclass
class SpitzerState:
    zeta: np.ndarray
    clock: float
    aborted: bool = False


def sphere_bm_skew(w_path, theta_path, mu, rng, dt):
    """Assemble X_mu along one flag path; returns a list of SpherePathState."""
    mu = np.asarray(DeformationParams(tuple(np.atleast_1d(mu))).mu)
    w = np.stack([fp.w if isinstance(fp, FlagPoint) else np.asarray(fp) for fp in w_path])
    theta = np.asarray(theta_path, dtype=float)
    steps = w.shape[0]
    n = w.shape[-1]
    if mu.size != n or theta.shape != (steps, n):
        raise ValueError("mu, w and theta paths disagree in shape")
    beta = np.zeros((steps, n))
    beta[1:] = np.cumsum(rng.standard_normal((steps - 1, n)) * np.sqrt(dt), axis=0)
    rho = 1 / np.sqrt(1 + np.sum(np.abs(w) ** 2, axis=-2))
    eta = mu * beta + theta
    X = rho * np.exp(1j * eta)
    return [SpherePathState(X[k], eta[k], rho[k]) for k in range(steps)]


def unwrap_windings(X_path, return_flags=False):
    """Continuous phases along a path of complex vectors (rows are times)."""
    X = np.asarray(X_path, dtype=complex)
    if np.any(np.abs(X) < ZERO_MODULUS):
        raise NearZeroError("a coordinate modulus fell below 1e-6")
    eta0 = np.mod(np.angle(X[0]), 2 * np.pi)
    inc = np.angle(X[1:] / X[:-1])
    eta = np.concatenate([eta0[None], eta0 + np.cumsum(inc, axis=0)])
    if return_flags:
        return eta, int(np.count_nonzero(np.abs(inc) >= np.pi / 2))
    return eta


def _bridge_points(z0, z1, dt, m, rng):
    """m-1 interior points of a complex Brownian bridge on a uniform grid."""
    s = np.arange(1, m) / m
    walk = np.concatenate([[0], np.cumsum(rng.standard_normal((m, 2)) @ [1, 1j])])
    walk *= np.sqrt(dt / m)
    bridge = walk[1:-1] - s * walk[-1]
    return z0 + s * (z1 - z0) + bridge


def spitzer_functionals(Z_path, dt, rng=None, refine=16, retries=3):
    """Winding integrals and clock along a discrete flat path (rows = times).

    Steps touching a coordinate of modulus below 0.05 are refined with a
    Brownian bridge; a refined point below 1e-6 triggers a redraw, and
    repeated failure aborts the path.
    """
    Z = np.asarray(Z_path, dtype=complex)
    rng = stream(0) if rng is None else rng
    n = Z.shape[1]
    zeta = np.zeros(n)
    clock = 0.0
    out = [SpitzerState(zeta.copy(), clock)]
    for k in range(Z.shape[0] - 1):
        z0, z1 = Z[k], Z[k + 1]
        for j in range(n):
            if min(abs(z0[j]), abs(z1[j])) < SUBSTEP_MODULUS:
                for _ in range(retries):
                    pts = np.concatenate([[z0[j]], _bridge_points(z0[j], z1[j], dt, refine, rng), [z1[j]]])
                    if np.all(np.abs(pts) >= ZERO_MODULUS):
                        break
                else:
                    out.append(SpitzerState(zeta.copy(), clock, aborted=True))
                    return out
                zeta[j] += np.sum((np.conj(pts[:-1]) * np.diff(pts)).imag / np.abs(pts[:-1]) ** 2)
            else:
                zeta[j] += (np.conj(z0[j]) * (z1[j] - z0[j])).imag / abs(z0[j]) ** 2
        clock += dt / np.sum(np.abs(z0) ** 2)
        out.append(SpitzerState(zeta.copy(), clock))
    return out


@njit(cache=True)
def _spitzer_path(z0, t_end, h, K, h_a, delta, seed, zeta):
    np.random.seed(seed)
    n = z0.size
    rho = np.log(np.abs(z0))
    phi = np.angle(z0)
    debt = np.zeros(n)
    for j in range(n):
        zeta[j] = 0.0
    t = 0.0
    clock = 0.0
    jumps = 0
    while t < t_end:
        r2 = 0.0
        for j in range(n):
            r2 += np.exp(2 * rho[j])
        dt = min(h * r2, t_end - t)
        for j in range(n):
            m2 = np.exp(2 * rho[j])
            # time already spent by this coordinate during earlier substeps
            span = dt - debt[j]
            if span <= 0.0:
                debt[j] = -span
                continue
            if m2 > K * dt:
                debt[j] = 0.0
                sd = np.sqrt(span)
                re = np.exp(rho[j]) * np.cos(phi[j]) + sd * np.random.standard_normal()
                im = np.exp(rho[j]) * np.sin(phi[j]) + sd * np.random.standard_normal()
                ang = np.arctan2(im, re)
                d = ang - phi[j]
                d -= 2 * np.pi * np.floor((d + np.pi) / (2 * np.pi))
                phi[j] += d
                zeta[j] += d
                rho[j] = 0.5 * np.log(re * re + im * im)
                continue
            # log-polar substeps in the clock of coordinate j
            remaining = span
            while remaining > 1e-12 * dt:
                m2 = np.exp(2 * rho[j])
                if m2 < delta * remaining:
                    c = 0.5 * np.log(0.1 * remaining)
                    dd = c - rho[j]
                    g = np.random.standard_normal()
                    a_star = dd * dd / (g * g)
                    w = np.sqrt(a_star) * np.random.standard_normal()
                    phi[j] += w
                    zeta[j] += w
                    rho[j] = c
                    remaining -= 0.5 * np.exp(2 * c) * (1 - np.exp(-2 * dd))
                    jumps += 1
                    continue
                da = min(h_a, remaining / m2)
                sa = np.sqrt(da)
                r_new = rho[j] + sa * np.random.standard_normal()
                w = sa * np.random.standard_normal()
                phi[j] += w
                zeta[j] += w
                remaining -= 0.5 * da * (m2 + np.exp(2 * r_new))
                rho[j] = r_new
            debt[j] = -remaining
        r2_new = 0.0
        for j in range(n):
            r2_new += np.exp(2 * rho[j])
        clock += 0.5 * dt * (1.0 / r2 + 1.0 / r2_new)
        t += dt
    return clock, jumps


@njit(cache=True)
def _spitzer_batch(z0, t_end, h, K, h_a, delta, seeds, zeta_out, clock_out):
    for p in range(seeds.size):
        clock, _ = _spitzer_path(z0, t_end, h, K, h_a, delta, seeds[p], zeta_out[p])
        clock_out[p] = clock


def simulate_spitzer(z0, t_end, seed, paths, h=1e-3, K=100.0, h_a=0.05, delta=1e-3):
    """Final windings zeta(t) and clocks for many flat Brownian paths.

    Global steps have length h |Z|^2.  A coordinate with |Z_j|^2 <= K dt is
    advanced in its own clock instead; below delta * dt the excursion back up
    is a single first-passage draw.
    """
    z0 = np.asarray(z0, dtype=complex)
    if np.any(z0 == 0):
        raise ValueError("every starting coordinate must be nonzero")
    zeta = np.empty((paths, z0.size))
    clock = np.empty(paths)
    _spitzer_batch(z0, float(t_end), h, K, h_a, delta, path_seeds(seed, paths), zeta, clock)
    return zeta, clock


def simulate_winding_long(n, t_end, mu, seed, paths, **kw):
    """eta(t) - eta(0) for the deformed sphere at long horizons."""
    mu = np.asarray(DeformationParams(tuple(mu)).mu)
    lam0 = np.full(n, 1.0 / n)
    lam, clock, _ = simulate_radial_clock(lam0, t_end, seed, paths, **kw)
    theta = sample_area_given_radial(clock, t_end, stream(seed, 2**40))
    beta = stream(seed, 2**40 + 1).standard_normal((paths, n)) * np.sqrt(t_end)
    return mu * beta + theta
