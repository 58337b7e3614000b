"""Statistical checks that turn simulations into pass/fail verdicts."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats as sps


@dataclass(frozen=True)
class TestVerdict:
    name: str
    statistic: float
    threshold: float
    passed: bool
    n: int
    seed: int

    __test__ = False  # keep pytest from collecting this class

    @classmethod
    def make(cls, name, statistic, threshold, n, seed):
        statistic = float(statistic)
        threshold = float(threshold)
        return cls(name, statistic, threshold, bool(statistic <= threshold), int(n), int(seed))

    def line(self):
        return (f"{self.name} {self.statistic:.17g} {self.threshold:.17g} "
                f"{'PASS' if self.passed else 'FAIL'} {self.seed} {self.n}")


@dataclass(frozen=True)
class EmpiricalCF:
    grid: np.ndarray
    values: np.ndarray
    stderr: np.ndarray
    stderr_re: np.ndarray


def empirical_cf(samples, grid):
    """Sample mean of exp(i u.x) per grid point, with jackknife errors."""
    x = np.asarray(samples, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    N = x.shape[0]
    if N < 100:
        raise ValueError("need at least 100 samples")
    e = np.exp(1j * (x @ grid.T))  # (N, G)
    mean = e.mean(axis=0)
    # leave-one-out means; for a sample mean this reduces to std / sqrt(N)
    loo = (e.sum(axis=0) - e) / (N - 1)
    jack = np.sqrt((N - 1) / N * np.sum(np.abs(loo - loo.mean(axis=0)) ** 2, axis=0))
    jack_re = np.sqrt((N - 1) / N * np.sum((loo.real - loo.real.mean(axis=0)) ** 2, axis=0))
    return EmpiricalCF(grid, mean, jack, jack_re)


def ks_statistic(samples, cdf):
    """Sup-distance between the empirical CDF of the samples and ``cdf``."""
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < 100:
        raise ValueError("need at least 100 samples")
    return float(sps.kstest(x, cdf).statistic)


def realized_qv(x, y, dt, window, conj=False):
    """Windowed realized covariation rates sum(dx dy) / (window dt).

    x, y hold one path (or a batch on trailing axes) with time on axis 0.
    Returns (rates, start_indices).
    """
    if window < 10:
        raise ValueError("window must span at least 10 steps")
    dx = np.diff(np.asarray(x), axis=0)
    dy = np.diff(np.asarray(y), axis=0)
    if conj:
        dy = np.conj(dy)
    prod = dx * dy
    nwin = prod.shape[0] // window
    if nwin == 0:
        raise ValueError("path shorter than one window")
    prod = prod[: nwin * window].reshape((nwin, window) + prod.shape[1:])
    starts = np.arange(nwin) * window
    return prod.sum(axis=1) / (window * dt), starts


def generator_check(simulate, generator_value, f, x0, h, paths, seed, C=1.0, name="generator"):
    """Compare the Monte Carlo slope (E f(X_h) - f(x0)) / h with Lf(x0).

    ``simulate(x0, h, paths, seed)`` returns an array of states after time h
    (one per row); ``f`` maps a batch of states to reals.
    """
    states = simulate(x0, h, paths, seed)
    fx = np.asarray(f(states), dtype=float)
    f0 = float(np.asarray(f(np.asarray(x0)[None]), dtype=float)[0])
    slope = (fx.mean() - f0) / h
    se = fx.std(ddof=1) / np.sqrt(fx.size) / h
    return TestVerdict.make(name, abs(slope - generator_value), 3 * se + C * h, fx.size, seed)

