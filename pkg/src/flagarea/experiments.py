"""Registered experiments.

Each experiment takes an ExperimentConfig and returns ``(verdicts, series)``
where ``series`` maps a data-file stem to an ordered column dict.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, fields

import numpy as np
from scipy import stats as sps

from . import charfn, flag, jacobi, radial, unitary, windings
from .io import histogram_series
from .rng import block_streams, child_seed, stream
from .stats import TestVerdict, empirical_cf, ks_statistic, realized_qv


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    n: int = 2
    t_end: float = 1.0
    dt: float = 1e-3
    paths: int = 1000
    seed: int = 1
    u_grid: str = "-1,1"
    kappa: tuple | None = None
    mu: tuple | None = None
    out: str = "."
    tol: float = 1e-10
    trajectories: bool = False

    def __post_init__(self):
        if self.name not in REGISTRY:
            raise ValueError(f"unknown experiment {self.name!r}; choose from {sorted(REGISTRY)}")
        if int(self.n) < 2:
            raise ValueError("n must be at least 2")
        for key in ("t_end", "dt", "paths", "tol"):
            v = getattr(self, key)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ValueError(f"{key} must be positive, got {v!r}")
        if self.seed < 0:
            raise ValueError("seed must be a nonnegative 64-bit integer")
        if self.kappa is not None:
            jacobi.JacobiParams(tuple(self.kappa))
            if len(self.kappa) != self.n:
                raise ValueError("kappa must have n entries")
        if self.mu is not None:
            windings.DeformationParams(tuple(self.mu))
            if len(self.mu) != self.n:
                raise ValueError("mu must have n entries")
        parse_u_grid(self.u_grid, self.n)

    def echo(self):
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(f"{x:.17g}" for x in v)
            elif isinstance(v, float):
                v = f"{v:.17g}"
            elif isinstance(v, bool):
                v = int(v)
            lines.append(f"{f.name}={v}")
        return lines


def parse_u_grid(spec, n):
    """Axis values 'a,b,c' -> all n-vectors over those values, origin removed."""
    try:
        axis = sorted({float(s) for s in str(spec).split(",") if s.strip()})
    except ValueError as exc:
        raise ValueError(f"bad u-grid {spec!r}") from exc
    if not axis:
        raise ValueError("empty u-grid")
    grid = np.array([u for u in itertools.product(axis, repeat=n) if any(u)], dtype=float)
    if grid.size == 0:
        raise ValueError("u-grid has no nonzero point")
    return grid


def _cf_series(grid, analytic, ecf):
    s = {f"u{j + 1}": grid[:, j] for j in range(grid.shape[1])}
    s["analytic"] = analytic
    s["empirical_re"] = ecf.values.real
    s["stderr"] = ecf.stderr_re
    return s


# ---------------------------------------------------------------------------


def unitary_check(cfg):
    n = cfg.n
    U0 = unitary.fourier_matrix(n)
    steps = int(np.ceil(cfg.t_end / cfg.dt - 1e-9))
    defect = np.zeros(steps + 1)
    simplex = np.zeros(steps + 1)
    flagged = 0
    traj = []
    for start, stop, rng in block_streams(cfg.seed, cfg.paths):
        for k, (t, U) in enumerate(unitary.iter_unitary(U0, cfg.t_end, cfg.dt, rng, paths=stop - start)):
            defect[k] = max(defect[k], unitary.unitarity_defect(U).max())
            lam = flag.lambda_from_U(U)
            simplex[k] = max(simplex[k], np.abs(lam.sum(axis=-1) - 1).max())
            flagged += int(np.count_nonzero(unitary.near_singular(U)))
            if cfg.trajectories and start == 0:
                traj.append(np.concatenate([[t], lam[0]]))
    verdicts = [
        TestVerdict.make("unitarity", defect.max(), 1e-8, cfg.paths, cfg.seed),
        TestVerdict.make("simplex-sum", simplex.max(), 1e-12, cfg.paths, cfg.seed),
    ]
    every = max(1, steps // 100)
    idx = np.arange(0, steps + 1, every)
    series = {"unitarity": {"t": idx * cfg.dt, "max_defect": defect[idx], "max_simplex_err": simplex[idx]}}
    if traj:
        traj = np.array(traj)
        series["trajectory"] = {"t": traj[:, 0], **{f"lambda{j + 1}": traj[:, j + 1] for j in range(n)}}
    return verdicts, series


def _qv_paths(cfg):
    n = cfg.n
    U0 = unitary.fourier_matrix(n)
    steps = int(np.ceil(cfg.t_end / cfg.dt - 1e-9))
    W = np.empty((steps + 1, cfg.paths, n - 1, n), dtype=complex)
    TH = np.empty((steps + 1, cfg.paths, n))
    for start, stop, rng in block_streams(cfg.seed, cfg.paths):
        acc = None
        for k, (t, U) in enumerate(unitary.iter_unitary(U0, cfg.t_end, cfg.dt, rng, paths=stop - start)):
            fp = flag.project_to_flag(U)
            if acc is None:
                acc = flag.AreaAccumulator(fp, cfg.dt)
            else:
                acc.push(fp)
            W[k, start:stop] = fp.w
            TH[k, start:stop] = acc.theta
    return W, TH


def qv_check(cfg, window=100):
    """Realized covariations of (w, theta) against their predicted coefficients.

    Each window gives a ratio realized rate / predicted rate (coefficient at
    the window start).  The statistic is |median ratio - 1| over all paths and
    windows.  A plain mean is dominated by the few windows in which a path
    nears the chart boundary and the window-start coefficient is stale.
    Quantities predicted to vanish are divided by a natural rate and averaged.
    """
    W, TH = _qv_paths(cfg)
    dt = cfg.dt
    n = cfg.n
    starts = None
    verdicts = []
    rows = []

    def coef(name, R, P):
        ratio = R / P
        c = np.median(ratio.real) + 1j * np.median(ratio.imag)
        stat = abs(c - 1)
        verdicts.append(TestVerdict.make(name, stat, 0.1, cfg.paths, cfg.seed))
        rows.append((len(rows), float(np.real(c)), float(np.imag(c)), stat))

    def vanish(name, R, scale):
        c = np.mean(R / scale)
        stat = abs(c)
        verdicts.append(TestVerdict.make(name, stat, 0.1, cfg.paths, cfg.seed))
        rows.append((len(rows), float(np.real(c)), float(np.imag(c)), stat))

    k, m = 0, min(1, n - 2)
    for j in range(n):
        R, starts = realized_qv(W[:, :, k, j], W[:, :, k, j], dt, window, conj=True)
        w = W[starts]
        r2 = np.sum(np.abs(w[..., j]) ** 2, axis=-1)
        P = 2 * (1 + r2) * (1 + np.abs(w[:, :, k, j]) ** 2)
        coef(f"qv-dw{k + 1}{j + 1}-dwbar{k + 1}{j + 1}", R, P)
    w = W[starts]
    # dw_k1 dw_m2 (different columns, no conjugate)
    R, _ = realized_qv(W[:, :, k, 0], W[:, :, m, 1], dt, window)
    P = -2 * (w[:, :, k, 1] - w[:, :, k, 0]) * (w[:, :, m, 0] - w[:, :, m, 1])
    coef(f"qv-dw{k + 1}1-dw{m + 1}2", R, P)
    # dw_k1 dwbar_m2 vanishes across columns
    R, _ = realized_qv(W[:, :, k, 0], W[:, :, m, 1], dt, window, conj=True)
    r2 = np.sum(np.abs(w) ** 2, axis=-2)
    scale = 2 * np.sqrt((1 + r2[..., 0]) * (1 + r2[..., 1]) * (1 + np.abs(w[:, :, k, 0]) ** 2)
                        * (1 + np.abs(w[:, :, m, 1]) ** 2))
    vanish(f"qv-dw{k + 1}1-dwbar{m + 1}2", R, scale)
    for j in range(n):
        R, _ = realized_qv(TH[:, :, j], TH[:, :, j], dt, window)
        coef(f"qv-dtheta{j + 1}-dtheta{j + 1}", R, r2[..., j])
    R, _ = realized_qv(TH[:, :, 0], TH[:, :, 1], dt, window)
    coef("qv-dtheta1-dtheta2", R, np.ones_like(R))
    rows = np.array(rows)
    series = {"qv": {"quantity": rows[:, 0], "coef_re": rows[:, 1], "coef_im": rows[:, 2],
                     "rel_err": rows[:, 3]}}
    return verdicts, series


def _cdf_on_grid(x, grid):
    x = np.sort(x)
    return np.searchsorted(x, grid, side="right") / x.size


def radial_agreement(cfg):
    n = cfg.n
    U = unitary.simulate_unitary_batch(unitary.fourier_matrix(n), cfg.t_end, cfg.dt,
                                       child_seed(cfg.seed, "unitary"), cfg.paths)
    lam_u = flag.lambda_from_U(U)
    lam_s = flag.simulate_jacobi_sde(np.full(n, 1.0 / n), cfg.t_end, cfg.dt,
                                     child_seed(cfg.seed, "sde"), cfg.paths)
    stat = sps.ks_2samp(lam_u[:, 0], lam_s[:, 0]).statistic
    grid = np.linspace(0, 1, 201)
    series = {"lambda1_cdf": {"x": grid, "cdf_unitary": _cdf_on_grid(lam_u[:, 0], grid),
                              "cdf_sde": _cdf_on_grid(lam_s[:, 0], grid)}}
    return [TestVerdict.make("radial-two-route", stat, 0.02, cfg.paths, cfg.seed)], series


def stationarity(cfg):
    n = cfg.n
    lam = flag.simulate_jacobi_sde(np.full(n, 1.0 / n), cfg.t_end, cfg.dt, cfg.seed, cfg.paths)
    stat = ks_statistic(lam[:, 0], sps.beta(1, n - 1).cdf)
    series = {"lambda1_hist": histogram_series(lam[:, 0], 50, (0.0, 1.0))}
    return [TestVerdict.make("stationary-beta", stat, 0.015, cfg.paths, cfg.seed)], series


def _kappa_list(cfg):
    if cfg.kappa is not None:
        return [tuple(cfg.kappa)]
    asym = (0.5, 1.5, 1.0)[: cfg.n] if cfg.n <= 3 else tuple(0.5 + 0.25 * j for j in range(cfg.n))
    return [(0.5,) * cfg.n, asym]


def jacobi_spectral(cfg):
    n = cfg.n
    rng = stream(cfg.seed)
    verdicts = []
    rows = []
    for kappa in _kappa_list(cfg):
        params = jacobi.JacobiParams(kappa)
        tag = ",".join(f"{k:g}" for k in kappa)
        basis = jacobi.SimplexJacobiBasis(params, 3)
        nodes, weights = jacobi.simplex_quadrature(params, 8)
        P = basis.evaluate(nodes)
        gram = (P * weights) @ P.T
        verdicts.append(TestVerdict.make(f"orthonormality[{tag}]", np.abs(gram - np.eye(len(basis))).max(),
                                         1e-8, len(basis), cfg.seed))
        # interior test points drawn from a Dirichlet(2,...,2), kept away from the faces
        pts = rng.dirichlet(np.full(n, 2.0), size=200)
        pts = pts[np.min(pts, axis=1) > 0.02][:20, :-1]
        worst = 0.0
        for tau, deg in zip(basis.indices, basis.degrees):
            ev = jacobi.eigenvalue(deg, params)
            vals = jacobi.simplex_jacobi(tau, params, pts)
            scale = max(abs(ev) * np.max(np.abs(vals)), 1.0)
            res = max(abs(jacobi.apply_generator_fd(params, lambda x: float(jacobi.simplex_jacobi(tau, params, x)), p)
                          - ev * v) for p, v in zip(pts, vals))
            worst = max(worst, res / scale)
            rows.append((deg, ev, res / scale))
        verdicts.append(TestVerdict.make(f"eigen-residual[{tag}]", worst, 1e-4, len(pts), cfg.seed))
        x = pts[0]
        mass_err = 0.0
        for t in (0.25, 0.5, 1.0):
            trunc = jacobi.choose_truncation(params, t, x, x, cfg.tol)
            qn, qw = jacobi.simplex_quadrature(params, trunc.max_degree + 2)
            q = jacobi.heat_kernel(params, t, x, qn, trunc=trunc).value
            mass_err = max(mass_err, abs(q @ qw - 1))
        verdicts.append(TestVerdict.make(f"kernel-mass[{tag}]", mass_err, 1e-6, 3, cfg.seed))
        if n == 2:
            y = pts[1]
            probe = np.stack([x, y])
            trunc = jacobi.choose_truncation(params, 0.5, probe, probe, cfg.tol)
            qn, qw = jacobi.simplex_quadrature(params, 2 * trunc.max_degree + 2)
            left = jacobi.heat_kernel(params, 0.5, x, qn, trunc=trunc).value
            right = jacobi.heat_kernel(params, 0.5, y, qn, trunc=trunc).value
            lhs = np.sum(left * right * qw)
            rhs = jacobi.heat_kernel(params, 1.0, x, y, tol=cfg.tol).value
            verdicts.append(TestVerdict.make(f"chapman-kolmogorov[{tag}]", abs(lhs - rhs), 1e-6, 1, cfg.seed))
    rows = np.array(rows)
    series = {"spectral": {"degree": rows[:, 0], "eigenvalue": rows[:, 1], "rel_residual": rows[:, 2]}}
    return verdicts, series


def cf_compare(cfg):
    n = cfg.n
    run = flag.simulate_area(unitary.fourier_matrix(n), cfg.t_end, cfg.dt, cfg.seed, cfg.paths)
    grid = parse_u_grid(cfg.u_grid, n)
    lam0 = np.full(n, 1.0 / n)
    analytic = np.array([charfn.unconditional_cf(u, cfg.t_end, lam0, tol=cfg.tol).value for u in grid])
    ecf = empirical_cf(run.theta, grid)
    stat = np.max(np.abs(analytic - ecf.values.real) - 3 * ecf.stderr_re)
    verdicts = [TestVerdict.make("cf-agreement", stat, 5e-3, cfg.paths, cfg.seed)]
    return verdicts, {"cf": _cf_series(grid, analytic, ecf)}


def area_limit(cfg):
    n = cfg.n
    theta, _, _ = radial.simulate_area_long(np.full(n, 1.0 / n), cfg.t_end, cfg.seed, cfg.paths,
                                            dt_max=cfg.dt)
    x = theta / cfg.t_end
    grid = parse_u_grid(cfg.u_grid, n)
    limit = np.array([charfn.limit_cf(u) for u in grid])
    ecf = empirical_cf(x, grid)
    ks = ks_statistic(x[:, 0], lambda v: charfn.cauchy_reference(v, n - 1)[1])
    verdicts = [
        TestVerdict.make("cauchy-ks", ks, 0.02, cfg.paths, cfg.seed),
        TestVerdict.make("cauchy-cf", np.max(np.abs(limit - ecf.values.real)), 0.03, cfg.paths, cfg.seed),
    ]
    return verdicts, {"cf": _cf_series(grid, limit, ecf),
                      "theta1_hist": histogram_series(x[:, 0], 80, (-10.0 * (n - 1), 10.0 * (n - 1)))}


def winding_limit(cfg):
    n = cfg.n
    mu = cfg.mu if cfg.mu is not None else (1.0,) * n
    eta = windings.simulate_winding_long(n, cfg.t_end, mu, cfg.seed, cfg.paths, dt_max=cfg.dt)
    x = eta / cfg.t_end
    grid = parse_u_grid(cfg.u_grid, n)
    limit = np.array([charfn.limit_cf(u) for u in grid])
    ecf = empirical_cf(x, grid)
    tag = ",".join(f"{m:g}" for m in mu)
    verdicts = [TestVerdict.make(f"winding-cf[{tag}]", np.max(np.abs(limit - ecf.values.real)), 0.03,
                                 cfg.paths, cfg.seed)]
    return verdicts, {"cf": _cf_series(grid, limit, ecf)}


def spitzer_exact_cf(nu, r, t):
    """Exact E exp(i nu * winding) of a planar Brownian motion started at radius r."""
    from scipy.special import ive

    y = r * r / (4 * t)
    a = np.abs(nu)
    return np.sqrt(np.pi / 8) * np.sqrt(r * r / t) * (ive((a - 1) / 2, y) + ive((a + 1) / 2, y))


def spitzer(cfg):
    n = cfg.n
    z0 = np.ones(n, dtype=complex)
    zeta, clock = windings.simulate_spitzer(z0, cfg.t_end, cfg.seed, cfg.paths, h=cfg.dt)
    L = math.log(cfg.t_end)
    target = 1.0 / (2 * (n - 1))
    med = float(np.median(clock / L))
    x = zeta[:, 0] / L
    cf1 = empirical_cf(x, [[1.0]])
    cf2 = empirical_cf(2 * x, [[1.0]])
    verdicts = [
        TestVerdict.make("spitzer-clock", abs(med - target) / target, 0.15, cfg.paths, cfg.seed),
        TestVerdict.make("spitzer-cf", abs(cf1.values[0].real - math.exp(-1)), 0.05, cfg.paths, cfg.seed),
        TestVerdict.make("spitzer-cf-2zeta", abs(cf2.values[0].real - math.exp(-1)), 0.05, cfg.paths, cfg.seed),
    ]
    u = np.linspace(0.25, 3.0, 12)
    ecf = empirical_cf(x, u[:, None])
    series = {"spitzer_cf": {"u": u, "empirical_re": ecf.values.real, "stderr": ecf.stderr_re,
                             "exact": spitzer_exact_cf(u / L, 1.0, cfg.t_end),
                             "cauchy_half": np.exp(-0.5 * u)}}
    return verdicts, series


REGISTRY = {
    "unitary-check": unitary_check,
    "qv-check": qv_check,
    "radial-agreement": radial_agreement,
    "stationarity": stationarity,
    "jacobi-spectral": jacobi_spectral,
    "cf-compare": cf_compare,
    "area-limit": area_limit,
    "winding-limit": winding_limit,
    "spitzer": spitzer,
}

DEFAULTS = {
    "unitary-check": dict(n=3, t_end=10.0, dt=1e-3, paths=100),
    "qv-check": dict(n=2, t_end=0.2, dt=1e-4, paths=1000),
    "radial-agreement": dict(n=3, t_end=1.0, dt=1e-3, paths=50000),
    "stationarity": dict(n=3, t_end=5.0, dt=1e-3, paths=50000),
    "jacobi-spectral": dict(n=2, t_end=1.0, dt=1e-3, paths=1),
    "cf-compare": dict(n=2, t_end=0.5, dt=1e-3, paths=200000, u_grid="-2,-1,1,2"),
    "area-limit": dict(n=2, t_end=30.0, dt=2e-3, paths=20000, u_grid="-1,-0.5,0,0.5,1"),
    "winding-limit": dict(n=2, t_end=30.0, dt=2e-3, paths=20000, u_grid="-1,-0.5,0,0.5,1"),
    "spitzer": dict(n=2, t_end=math.exp(10), dt=1e-3, paths=10000),
}


def default_config(name, **overrides):
    if name not in REGISTRY:
        raise ValueError(f"unknown experiment {name!r}; choose from {sorted(REGISTRY)}")
    values = dict(DEFAULTS[name])
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(name=name, **values)
