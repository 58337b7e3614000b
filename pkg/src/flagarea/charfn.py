"""Closed-form characteristic functions of the stochastic area vector.

The unconditional transform is evaluated through the Girsanov-tilted Jacobi
kernel: after the change of measure the radial process is again a Jacobi
diffusion, now with parameters ``1/2 + |u_j|``, and the remaining expectation
is a single integral over the simplex.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .jacobi import (
    JacobiParams,
    dirichlet_log_normalizer,
    dirichlet_weight,
    heat_kernel,
    simplex_quadrature,
)

MIN_KERNEL_TIME = 0.25


@dataclass(frozen=True)
class CFResult:
    value: complex
    quadrature_error: float = 0.0
    series_tail: float = 0.0


class QuadratureError(RuntimeError):
    pass


def _as_u(u):
    u = np.asarray(u, dtype=float)
    if u.ndim != 1 or u.size < 2:
        raise ValueError("u must be a vector with n >= 2 entries")
    if not np.all(np.isfinite(u)):
        raise ValueError("u must be finite")
    return u


def _as_simplex(lam, n):
    lam = np.asarray(lam, dtype=float)
    if lam.shape != (n,):
        raise ValueError(f"expected a point of T_{n}, got shape {lam.shape}")
    if np.any(lam <= 0) or abs(lam.sum() - 1) > 1e-10:
        raise ValueError("point must lie in the interior of the simplex")
    return lam


def gaussian_prefactor(u, t):
    """exp(-(n-1) sum|u_j| t - 1/2 sum_{j != m} (u_j u_m + |u_j u_m|) t)."""
    u = _as_u(u)
    n = u.size
    a = np.abs(u)
    cross = (u.sum() ** 2 - (u**2).sum()) + (a.sum() ** 2 - (a**2).sum())
    return np.exp(-(n - 1) * a.sum() * t - 0.5 * cross * t)


def tilted_params(u):
    return JacobiParams(tuple(0.5 + np.abs(_as_u(u))))


def limit_cf(u):
    """Characteristic function of n independent Cauchy(n-1) variables."""
    u = _as_u(u)
    return float(np.exp(-(u.size - 1) * np.abs(u).sum()))


def cauchy_reference(x, scale):
    if scale <= 0:
        raise ValueError("scale must be positive")
    x = np.asarray(x, dtype=float)
    density = scale / (np.pi * (scale**2 + x**2))
    cdf = 0.5 + np.arctan(x / scale) / np.pi
    return density, cdf


def conditional_cf(u, t, lam0, lam, tol=1e-12):
    """E[exp(i u.theta(t)) | lambda(t) = lam] for the radial start lam0."""
    u = _as_u(u)
    n = u.size
    lam0 = _as_simplex(lam0, n)
    lam = _as_simplex(lam, n)
    if t < MIN_KERNEL_TIME:
        raise ValueError(f"kernel evaluation requires t >= {MIN_KERNEL_TIME}")
    if not np.any(u):
        return CFResult(1.0)
    base = JacobiParams.symmetric(n)
    tilt = tilted_params(u)
    q_tilt = heat_kernel(tilt, 2 * t, lam0[:-1], lam[:-1], tol=tol)
    q_base = heat_kernel(base, 2 * t, lam0[:-1], lam[:-1], tol=tol)
    weight_ratio = dirichlet_weight(tilt, lam[:-1]) / dirichlet_weight(base, lam[:-1])
    a = np.abs(u)
    value = (gaussian_prefactor(u, t) * np.prod((lam0 / lam) ** (a / 2))
             * q_tilt.value / q_base.value * weight_ratio)
    tail = q_tilt.truncation.tail_bound + q_base.truncation.tail_bound
    return CFResult(float(value), 0.0, float(tail * abs(value) / max(abs(q_base.value), 1e-300)))


def _tilted_integral(u, t, lam0, degree, tol):
    """int prod lam_j^{-|u_j|/2} q^{tilt}_{2t}(lam0, lam) W^{tilt}(lam) dlam."""
    a = np.abs(u)
    tilt = tilted_params(u)
    # absorb lam^{-|u|/2} into the quadrature weight: exponents |u_j|/2
    quad = JacobiParams(tuple(0.5 + a / 2))
    nodes, weights = simplex_quadrature(quad, degree)
    const = np.exp(dirichlet_log_normalizer(tilt) - dirichlet_log_normalizer(quad))
    q = heat_kernel(tilt, 2 * t, lam0[:-1], nodes, tol=tol)
    return const * float(q.value @ weights), q.truncation


def unconditional_cf(u, t, lam0, tol=1e-12, rel_change=1e-6, max_quad_degree=256):
    """E[exp(i u.theta(t))] started from the radial point lam0."""
    u = _as_u(u)
    n = u.size
    lam0 = _as_simplex(lam0, n)
    if t < MIN_KERNEL_TIME:
        raise ValueError(f"kernel evaluation requires t >= {MIN_KERNEL_TIME}")
    if not np.any(u):
        return CFResult(1.0)
    a = np.abs(u)
    front = gaussian_prefactor(u, t) * np.prod(lam0 ** (a / 2))
    degree = 8
    prev, trunc = _tilted_integral(u, t, lam0, degree, tol)
    degree = max(16, 2 * trunc.max_degree)
    while True:
        cur, trunc = _tilted_integral(u, t, lam0, degree, tol)
        change = abs(cur - prev)
        if change <= rel_change * max(abs(cur), 1e-300):
            break
        if 2 * degree > max_quad_degree:
            raise QuadratureError(f"quadrature did not settle (last change {change:.3g})")
        prev = cur
        degree *= 2
    return CFResult(float(front * cur), float(front * change), float(front * trunc.tail_bound))


def stationary_cf(u, t, lam0):
    """Large-t form of ``unconditional_cf``: the tilted kernel replaced by 1.

    The remaining integral is a Dirichlet moment and has a closed form.
    """
    u = _as_u(u)
    n = u.size
    lam0 = _as_simplex(lam0, n)
    a = np.abs(u)
    shape = 1.0 + a
    log_moment = (gammaln(shape.sum()) - gammaln(shape).sum()
                  + gammaln(shape - a / 2).sum() - gammaln(shape.sum() - a.sum() / 2))
    return float(gaussian_prefactor(u, t) * np.prod(lam0 ** (a / 2)) * np.exp(log_moment))
