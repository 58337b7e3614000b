"""Long-horizon simulation of the radial process and its area clocks.

At large t the area is dominated by excursions of some lambda_j towards 0,
where a fixed-step scheme cannot follow the clock int dt / lambda_j.  This
simulator works with y = log(lambda) and a step dt = min(dt_max, h min lambda).
Near the boundary y_j is, in the clock time A = int dt / lambda_j, a driftless
Brownian motion of variance 4 per unit A.  So once lambda_j drops below
``eps_low``, the excursion back up to ``eps_up`` is replaced by an exact
first-passage draw for the clock.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .flag import sample_area_given_radial
from .rng import block_streams, stream


@njit(cache=True)
def _radial_path(lam0, t_end, dt_max, h, eps_low, eps_up, seed, clock):
    np.random.seed(seed)
    n = lam0.size
    lam = lam0.copy()
    y = np.log(lam)
    for j in range(n):
        clock[j] = 0.0
    c_up = np.log(eps_up)
    t = 0.0
    jumps = 0
    steps = 0
    root = np.empty(n)
    dy = np.empty(n)
    while t < t_end:
        deep = -1
        ndeep = 0
        for j in range(n):
            if lam[j] < eps_low:
                ndeep += 1
                deep = j
        if ndeep == 1:
            d = c_up - y[deep]
            z = np.random.standard_normal()
            a_star = (0.5 * d) ** 2 / (z * z)
            tau = 0.5 * eps_up * (1.0 - np.exp(-d))
            for k in range(n):
                if k != deep:
                    clock[k] += tau * (1.0 - lam[k]) / lam[k]
            clock[deep] += max(a_star - tau, 0.0)
            scale = (1.0 - eps_up) / (1.0 - lam[deep])
            for k in range(n):
                lam[k] = eps_up if k == deep else lam[k] * scale
                y[k] = np.log(lam[k])
            t += tau
            jumps += 1
            continue
        lmin = lam[0]
        for j in range(1, n):
            lmin = min(lmin, lam[j])
        dt = min(dt_max, h * lmin, t_end - t)
        sd = np.sqrt(dt)
        for j in range(n):
            root[j] = np.sqrt(lam[j])
            dy[j] = 0.0
        for j in range(n):
            for l in range(j + 1, n):
                v = np.random.standard_normal() * sd
                # gamma_{lj} = -gamma_{jl} = v
                dy[j] += root[l] * v
                dy[l] -= root[j] * v
        m = -np.inf
        for j in range(n):
            y[j] += -2.0 * (n - 1) * dt + 2.0 * dy[j] / root[j]
            m = max(m, y[j])
        tot = 0.0
        for j in range(n):
            tot += np.exp(y[j] - m)
        lt = m + np.log(tot)
        for j in range(n):
            y[j] -= lt
            new = np.exp(y[j])
            # trapezoid rule for the clock
            clock[j] += 0.5 * dt * ((1.0 - lam[j]) / lam[j] + (1.0 - new) / new)
            lam[j] = new
        t += dt
        steps += 1
    return lam, jumps, steps


@njit(cache=True)
def _radial_batch(lam0, t_end, dt_max, h, eps_low, eps_up, seeds, lam_out, clock_out, stats):
    for p in range(seeds.size):
        lam, jumps, steps = _radial_path(lam0, t_end, dt_max, h, eps_low, eps_up,
                                         seeds[p], clock_out[p])
        lam_out[p] = lam
        stats[p, 0] = jumps
        stats[p, 1] = steps


def path_seeds(seed, paths):
    """32-bit per-path seeds drawn from the counter-based block streams."""
    out = np.empty(paths, dtype=np.int64)
    for start, stop, rng in block_streams(seed, paths):
        out[start:stop] = rng.integers(0, 2**32 - 1, size=stop - start)
    return out


def simulate_radial_clock(lam0, t_end, seed, paths, dt_max=2e-3, h=0.05,
                          eps_low=1e-3, eps_up=1e-2):
    """Final lambda, diagonal clocks and (jumps, steps) per path."""
    lam0 = np.asarray(lam0, dtype=float)
    if not (0 < eps_low < eps_up < 1.0 / lam0.size):
        raise ValueError("need 0 < eps_low < eps_up < 1/n")
    lam = np.empty((paths, lam0.size))
    clock = np.empty((paths, lam0.size))
    stats = np.empty((paths, 2), dtype=np.int64)
    _radial_batch(lam0, float(t_end), dt_max, h, eps_low, eps_up,
                  path_seeds(seed, paths), lam, clock, stats)
    return lam, clock, stats


def simulate_area_long(lam0, t_end, seed, paths, **kw):
    """theta(t) samples for long horizons: clocks from the radial simulator,
    then the conditional Gaussian draw."""
    lam, clock, _ = simulate_radial_clock(lam0, t_end, seed, paths, **kw)
    theta = sample_area_given_radial(clock, t_end, stream(seed, 2**40))
    return theta, lam, clock
