import numpy as np
import pytest
from scipy import stats as sps

from flagarea.radial import simulate_area_long, simulate_radial_clock
from flagarea.flag import simulate_area
from flagarea.unitary import fourier_matrix


def test_parameter_checks():
    with pytest.raises(ValueError):
        simulate_radial_clock(np.full(2, 0.5), 1.0, 0, 10, eps_low=0.1, eps_up=0.05)


def test_radial_output_on_simplex_and_deterministic():
    lam, clock, stats = simulate_radial_clock(np.full(3, 1 / 3), 2.0, 4, 200)
    assert np.allclose(lam.sum(axis=1), 1) and np.all(lam > 0)
    assert np.all(clock > 0) and np.all(stats[:, 1] > 0)
    again = simulate_radial_clock(np.full(3, 1 / 3), 2.0, 4, 200)
    assert np.array_equal(lam, again[0]) and np.array_equal(clock, again[1])


def test_radial_stationary_law():
    lam, _, _ = simulate_radial_clock(np.full(2, 0.5), 5.0, 1, 5000)
    assert sps.kstest(lam[:, 0], sps.uniform.cdf).statistic < 0.03


def test_clock_matches_unitary_route():
    # the clock of coordinate j is int (1 - lambda_j) / lambda_j dt
    t = 0.5
    lam, clock, _ = simulate_radial_clock(np.full(2, 0.5), t, 2, 5000)
    run = simulate_area(fourier_matrix(2), t, 1e-3, 3, 5000)
    a, b = clock[:, 0], run.diag_clock[:, 0]
    assert sps.ks_2samp(a, b).statistic < 0.04


def test_long_area_scale():
    theta, _, _ = simulate_area_long(np.full(2, 0.5), 10.0, 5, 4000)
    # theta / t is close to Cauchy(1)
    assert sps.kstest(theta[:, 0] / 10.0, sps.cauchy.cdf).statistic < 0.05
