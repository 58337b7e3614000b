"""Jacobi polynomials on the simplex and the heat kernel of the Jacobi operator.

Points of the simplex are given by their first ``n - 1`` barycentric
coordinates ``(lambda_1, ..., lambda_{n-1})``; the last coordinate is
implicitly ``1 - sum``.  All arrays carry the coordinate axis last so that
batches of points can be evaluated at once.

Orthonormal polynomials are built by the stick-breaking construction: with
``s_j = lambda_j / (1 - lambda_1 - ... - lambda_{j-1})`` the Dirichlet weight
factorises into one-dimensional Jacobi weights, and the polynomial attached to
a multi-index ``tau`` is a product of one-dimensional Jacobi polynomials in the
``s_j``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, roots_jacobi

MAX_DEGREE = 60


class DomainError(ValueError):
    """Raised when a point lies too close to (or on) the simplex boundary."""


class ToleranceNotMet(RuntimeError):
    """Raised when a truncated series cannot reach the requested tolerance."""

    def __init__(self, message, achieved):
        super().__init__(message)
        self.achieved = achieved


@dataclass(frozen=True)
class JacobiParams:
    kappa: tuple

    def __post_init__(self):
        kappa = tuple(float(k) for k in self.kappa)
        if len(kappa) < 2:
            raise ValueError("kappa needs at least two entries")
        if any(k <= -0.5 for k in kappa):
            raise ValueError(f"all kappa_j must exceed -1/2, got {kappa}")
        object.__setattr__(self, "kappa", kappa)

    @property
    def n(self):
        return len(self.kappa)

    @property
    def total(self):
        return sum(self.kappa)

    @classmethod
    def symmetric(cls, n, value=0.5):
        return cls((value,) * n)


@dataclass(frozen=True)
class KernelTruncation:
    max_degree: int
    tail_bound: float


@dataclass(frozen=True)
class KernelValue:
    value: np.ndarray
    truncation: KernelTruncation


def _params(kappa):
    return kappa if isinstance(kappa, JacobiParams) else JacobiParams(tuple(kappa))


# ---------------------------------------------------------------------------
# one-dimensional Jacobi polynomials


def jacobi_poly_1d(m, alpha, beta, x):
    """Evaluate P_m^{(alpha, beta)}(x) with the three-term recurrence."""
    x = np.asarray(x, dtype=float)
    if m < 0:
        raise ValueError("degree must be nonnegative")
    p0 = np.ones_like(x)
    if m == 0:
        return p0
    p1 = 0.5 * (alpha - beta + (alpha + beta + 2.0) * x)
    ab = alpha + beta
    for k in range(2, m + 1):
        c = 2.0 * k + ab
        a1 = 2.0 * k * (k + ab) * (c - 2.0)
        a2 = (c - 1.0) * (alpha * alpha - beta * beta)
        a3 = (c - 2.0) * (c - 1.0) * c
        a4 = 2.0 * (k + alpha - 1.0) * (k + beta - 1.0) * c
        p0, p1 = p1, ((a2 + a3 * x) * p1 - a4 * p0) / a1
    return p1


def jacobi_series_1d(m, alpha, beta, x):
    """Explicit finite-sum form of P_m^{(alpha, beta)}; used as a cross-check."""
    x = np.asarray(x, dtype=float)
    total = np.zeros_like(x)
    for s in range(m + 1):
        # binom(m + alpha, m - s) * binom(m + beta, s)
        log_c = (gammaln(m + alpha + 1) - gammaln(m - s + 1) - gammaln(alpha + s + 1)
                 + gammaln(m + beta + 1) - gammaln(s + 1) - gammaln(beta + m - s + 1))
        total = total + np.exp(log_c) * ((x - 1) / 2) ** s * ((x + 1) / 2) ** (m - s)
    return total


def log_pochhammer(a, k):
    return gammaln(a + k) - gammaln(a)


# ---------------------------------------------------------------------------
# Dirichlet weight, spectrum, multi-indices


def dirichlet_log_normalizer(kappa):
    kappa = np.asarray(_params(kappa).kappa)
    n = kappa.size
    return gammaln(kappa.sum() + n / 2) - gammaln(kappa + 0.5).sum()


def _full_coordinates(lam, n):
    lam = np.asarray(lam, dtype=float)
    if lam.shape[-1] != n - 1:
        raise ValueError(f"expected {n - 1} simplex coordinates, got shape {lam.shape}")
    last = 1.0 - lam.sum(axis=-1, keepdims=True)
    return np.concatenate([lam, last], axis=-1)


def dirichlet_weight(kappa, lam):
    """Dirichlet density W^{(kappa)} at ``lam`` (first n-1 coordinates)."""
    params = _params(kappa)
    k = np.asarray(params.kappa)
    full = _full_coordinates(lam, params.n)
    expo = k - 0.5
    on_boundary = full <= 0.0
    if np.any(on_boundary & (expo < 0)):
        raise DomainError("Dirichlet weight is singular on this boundary face")
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = np.where(expo == 0, 0.0, expo * np.log(np.where(full > 0, full, 1.0)))
    logw = dirichlet_log_normalizer(params) + logs.sum(axis=-1)
    w = np.exp(logw)
    return np.where(np.any(on_boundary & (expo > 0), axis=-1), 0.0, w)


def eigenvalue(j, kappa, n=None):
    params = _params(kappa)
    n = params.n if n is None else n
    return -j * (j + params.total + (n - 2) / 2)


@lru_cache(maxsize=None)
def multi_indices(dim, degree):
    """All tuples of ``dim`` nonnegative integers summing to ``degree``."""
    if dim == 1:
        return ((degree,),)
    out = []
    for bars in itertools.combinations(range(degree + dim - 1), dim - 1):
        prev = -1
        tau = []
        for b in bars:
            tau.append(b - prev - 1)
            prev = b
        tau.append(degree + dim - 2 - prev)
        out.append(tuple(tau))
    return tuple(sorted(out, reverse=True))


def count_multi_indices(dim, degree):
    return len(multi_indices(dim, degree))


# ---------------------------------------------------------------------------
# simplex Jacobi polynomials


def _stick_parameters(tau, kappa):
    """Return the pairs (a_j, alpha_j) of the one-dimensional factors."""
    n = len(kappa)
    out = []
    for j in range(n - 1):
        a = 2 * sum(tau[j + 1:]) + sum(kappa[j + 1:]) + (n - j - 3) / 2
        out.append((a, kappa[j] - 0.5))
    return out


def log_norm_sq(tau, kappa):
    """log of the squared W-norm of the unnormalised product polynomial."""
    params = _params(kappa)
    total = dirichlet_log_normalizer(params)
    for m, (a, b) in zip(tau, _stick_parameters(tau, params.kappa)):
        c = a + b + 1
        if m == 0:
            denom = gammaln(c + 1)
        else:
            denom = np.log(2 * m + c) + gammaln(m + c)
        total += gammaln(m + a + 1) + gammaln(m + b + 1) - denom - gammaln(m + 1)
    return total


def simplex_jacobi(tau, kappa, lam, max_degree=MAX_DEGREE):
    """Orthonormal Jacobi polynomial P_tau^{(kappa)} evaluated at ``lam``."""
    params = _params(kappa)
    tau = tuple(int(t) for t in tau)
    if len(tau) != params.n - 1 or any(t < 0 for t in tau):
        raise ValueError(f"bad multi-index {tau} for n={params.n}")
    if sum(tau) > max_degree:
        raise ValueError(f"degree {sum(tau)} exceeds the cap {max_degree}")
    lam = np.asarray(lam, dtype=float)
    if lam.shape[-1] != params.n - 1:
        raise ValueError("coordinate dimension does not match kappa")
    rem = np.ones(lam.shape[:-1])
    val = np.ones(lam.shape[:-1])
    for j, (a, b) in enumerate(_stick_parameters(tau, params.kappa)):
        lj = lam[..., j]
        with np.errstate(divide="ignore", invalid="ignore"):
            s = np.where(rem > 0, lj / rem, 0.5)
        val = val * rem ** tau[j] * jacobi_poly_1d(tau[j], a, b, 2 * s - 1)
        rem = rem - lj
    return val * np.exp(-0.5 * log_norm_sq(tau, params))


class SimplexJacobiBasis:
    """All orthonormal polynomials of total degree <= ``max_degree``.

    Precomputes multi-indices and normalisations; instances are immutable
    after construction.
    """

    def __init__(self, kappa, max_degree):
        self.params = _params(kappa)
        if max_degree > MAX_DEGREE:
            raise ValueError(f"degree {max_degree} exceeds the cap {MAX_DEGREE}")
        self.max_degree = int(max_degree)
        dim = self.params.n - 1
        self.indices = [tau for d in range(self.max_degree + 1) for tau in multi_indices(dim, d)]
        self.degrees = np.array([sum(t) for t in self.indices])

    def __len__(self):
        return len(self.indices)

    def evaluate(self, lam):
        """Matrix of shape (len(basis), *points) with P_tau(lam)."""
        lam = np.asarray(lam, dtype=float)
        return np.stack([simplex_jacobi(t, self.params, lam) for t in self.indices])

    def eigenvalues(self):
        return eigenvalue(self.degrees, self.params)


# ---------------------------------------------------------------------------
# quadrature


def simplex_quadrature(kappa, degree):
    """Tensor Gauss-Jacobi rule on the simplex for the weight W^{(kappa)}.

    Exact for polynomials of total degree <= ``degree`` in the simplex
    coordinates.  Returns ``(nodes, weights)`` with nodes of shape
    (N, n-1) and weights summing to one.
    """
    params = _params(kappa)
    if degree < 1:
        raise ValueError("degree must be at least 1")
    k = np.asarray(params.kappa)
    n = params.n
    m = degree // 2 + 1
    alphas = k - 0.5
    axes = []
    for j in range(n - 1):
        beta_j = alphas[j + 1:].sum() + (n - j - 2)
        # roots_jacobi uses (1-x)^a (1+x)^b and s = (1+x)/2 carries s^{alpha_j}
        x, w = roots_jacobi(m, beta_j, alphas[j])
        axes.append(((x + 1) / 2, w / w.sum()))
    grids = np.meshgrid(*[a[0] for a in axes], indexing="ij")
    wgrid = np.ones_like(grids[0])
    for j, g in enumerate(np.meshgrid(*[a[1] for a in axes], indexing="ij")):
        wgrid = wgrid * g
    s = np.stack([g.ravel() for g in grids], axis=-1)
    nodes = np.empty_like(s)
    rem = np.ones(s.shape[0])
    for j in range(n - 1):
        nodes[:, j] = rem * s[:, j]
        rem = rem * (1 - s[:, j])
    return nodes, wgrid.ravel()


# ---------------------------------------------------------------------------
# Jacobi operator by finite differences


def _check_interior(lam, h):
    lam = np.asarray(lam, dtype=float)
    if np.min(lam) <= 2 * h or 1 - lam.sum() <= 2 * h:
        raise DomainError(f"point {lam} within 2h of the boundary (h={h})")


def _fd_derivatives(f, x, h):
    x = np.asarray(x, dtype=float)
    d = x.size
    eye = np.eye(d) * h
    f0 = f(x)
    grad = np.empty(d)
    hess = np.empty((d, d))
    for j in range(d):
        fp, fm = f(x + eye[j]), f(x - eye[j])
        grad[j] = (fp - fm) / (2 * h)
        hess[j, j] = (fp - 2 * f0 + fm) / h**2
        for l in range(j):
            v = (f(x + eye[j] + eye[l]) - f(x + eye[j] - eye[l])
                 - f(x - eye[j] + eye[l]) + f(x - eye[j] - eye[l])) / (4 * h**2)
            hess[j, l] = hess[l, j] = v
    return grad, hess


def apply_generator_fd(kappa, f, lam, h=1e-4):
    """Central-difference evaluation of the Jacobi operator G_kappa f at lam."""
    params = _params(kappa)
    lam = np.asarray(lam, dtype=float)
    _check_interior(lam, h)
    grad, hess = _fd_derivatives(f, lam, h)
    k = np.asarray(params.kappa)
    drift = (k[:-1] + 0.5) - (params.total + params.n / 2) * lam
    cov = np.diag(lam) - np.outer(lam, lam)
    return float(np.sum(cov * hess) + drift @ grad)


def apply_lifted_generator_fd(kappa, F, lam_full, h=1e-4):
    """The lifted operator on T_n, applied to F(lambda_1, ..., lambda_n)."""
    params = _params(kappa)
    lam_full = np.asarray(lam_full, dtype=float)
    if lam_full.size != params.n:
        raise ValueError("expected all n coordinates")
    if np.min(lam_full) <= 2 * h:
        raise DomainError(f"point {lam_full} within 2h of the boundary (h={h})")
    grad, hess = _fd_derivatives(F, lam_full, h)
    k = np.asarray(params.kappa)
    drift = (k + 0.5) - (params.total + params.n / 2) * lam_full
    cov = np.diag(lam_full) - np.outer(lam_full, lam_full)
    return float(np.sum(cov * hess) + drift @ grad)


# ---------------------------------------------------------------------------
# heat kernel


def _probe_max(params, degree, x, y):
    dim = params.n - 1
    vals = [np.max(np.abs(simplex_jacobi(t, params, x) * simplex_jacobi(t, params, y)))
            for t in multi_indices(dim, degree)]
    return max(vals)


def choose_truncation(kappa, t, x, y, tol=1e-10, max_degree=MAX_DEGREE):
    """Smallest degree J whose discarded tail is estimated below ``tol``.

    The tail estimate uses the growth of |P_tau(x) P_tau(y)| observed at the
    last included degree, so it is a heuristic bound rather than a rigorous one.
    """
    params = _params(kappa)
    dim = params.n - 1
    probe = np.concatenate([np.atleast_2d(x), np.atleast_2d(y).reshape(-1, dim)])
    m = 1.0
    for J in range(0, max_degree + 1):
        m = max(m, _probe_max(params, J, probe, probe)) if J > 0 else 1.0
        tail = 0.0
        for j in range(J + 1, J + 12):
            growth = m * (1.0 + j) ** 2
            tail += count_multi_indices(dim, j) * growth * np.exp(eigenvalue(j, params) * t)
        if tail < tol:
            return KernelTruncation(J, float(tail))
    raise ToleranceNotMet(f"heat kernel tail {tail:.3g} above {tol:.3g} at t={t}", tail)


def heat_kernel(kappa, t, x, y, tol=1e-10, trunc=None):
    """Transition density of exp(t G_kappa) with respect to W^{(kappa)}.

    ``x`` is a single point; ``y`` may be a batch of points.  The result
    carries the truncation degree and the estimated discarded mass.
    """
    params = _params(kappa)
    if t <= 0:
        raise ValueError("t must be positive")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if trunc is None:
        trunc = choose_truncation(params, t, x, y, tol)
    basis = SimplexJacobiBasis(params, trunc.max_degree)
    px = basis.evaluate(x)
    py = basis.evaluate(y)
    decay = np.exp(basis.eigenvalues() * t)
    value = np.tensordot(decay * px, py, axes=(0, 0))
    return KernelValue(value, trunc)
