import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import eval_jacobi

from flagarea.jacobi import (
    DomainError,
    JacobiParams,
    SimplexJacobiBasis,
    ToleranceNotMet,
    apply_generator_fd,
    apply_lifted_generator_fd,
    dirichlet_weight,
    eigenvalue,
    heat_kernel,
    jacobi_poly_1d,
    jacobi_series_1d,
    simplex_jacobi,
    simplex_quadrature,
)

KAPPAS = [(0.5, 0.5), (0.5, 1.5), (0.5, 0.5, 0.5), (0.5, 1.5, 1.0)]


def test_jacobi_1d_small_degrees():
    assert jacobi_poly_1d(0, 0.3, 0.7, 0.2) == 1.0
    assert jacobi_poly_1d(1, 0.0, 0.0, 1.0) == pytest.approx(1.0)


def test_jacobi_1d_against_series():
    v = jacobi_poly_1d(2, 1.0, 0.5, 0.3)
    assert abs(v - jacobi_series_1d(2, 1.0, 0.5, 0.3)) < 1e-12
    assert abs(v - eval_jacobi(2, 1.0, 0.5, 0.3)) < 1e-12


@settings(max_examples=50, deadline=None)
@given(m=st.integers(0, 12), a=st.floats(-0.9, 4), b=st.floats(-0.9, 4), x=st.floats(-1, 1))
def test_jacobi_1d_matches_scipy(m, a, b, x):
    assert jacobi_poly_1d(m, a, b, x) == pytest.approx(eval_jacobi(m, a, b, x), rel=1e-9, abs=1e-9)


def test_jacobi_1d_value_at_one():
    # P_m^{(a,b)}(1) = binom(m + a, m)
    assert jacobi_poly_1d(4, 1.0, 2.0, 1.0) == pytest.approx(5.0)


def test_params_reject_small_kappa():
    with pytest.raises(ValueError):
        JacobiParams((0.5, -0.5))


def test_dirichlet_weight_half_is_uniform():
    for x in (0.1, 0.5, 0.93):
        assert dirichlet_weight((0.5, 0.5), [x]) == pytest.approx(1.0)
    assert dirichlet_weight((0.5, 0.5, 0.5), [0.2, 0.3]) == pytest.approx(2.0)


def test_dirichlet_weight_boundary_domain_error():
    with pytest.raises(DomainError):
        dirichlet_weight((0.2, 0.5), [0.0])


def test_dirichlet_weight_symmetric():
    lam = np.array([0.2, 0.3, 0.5])
    a = dirichlet_weight((0.8, 0.8, 0.8), lam[:2])
    b = dirichlet_weight((0.8, 0.8, 0.8), lam[[2, 0]])
    assert a == pytest.approx(b)


@pytest.mark.parametrize("kappa", KAPPAS)
def test_quadrature_integrates_weight(kappa):
    nodes, w = simplex_quadrature(kappa, 6)
    assert abs(w.sum() - 1) < 1e-12


def test_quadrature_dirichlet_mean():
    for n in (2, 3, 4):
        nodes, w = simplex_quadrature((0.5,) * n, 4)
        assert abs(nodes[:, 0] @ w - 1 / n) < 1e-12


def test_quadrature_exactness_self_consistency():
    rng = np.random.default_rng(0)
    kappa = (0.5, 1.5, 1.0)
    c = rng.standard_normal((5, 5))
    poly = lambda x: sum(c[i, j] * x[:, 0] ** i * x[:, 1] ** j for i in range(5) for j in range(5 - i))
    a = [poly(q[0]) @ q[1] for q in (simplex_quadrature(kappa, 4), simplex_quadrature(kappa, 6))]
    assert abs(a[0] - a[1]) < 1e-10


def test_eigenvalues():
    assert eigenvalue(0, (0.5, 0.5)) == 0
    assert eigenvalue(1, (0.5, 0.5)) == -2
    assert eigenvalue(2, (0.5, 0.5, 0.5)) == -8


@pytest.mark.parametrize("kappa", KAPPAS)
def test_orthonormality(kappa):
    basis = SimplexJacobiBasis(kappa, 3)
    nodes, w = simplex_quadrature(kappa, 8)
    P = basis.evaluate(nodes)
    assert np.abs((P * w) @ P.T - np.eye(len(basis))).max() < 1e-8


def test_degree_zero_normalisation():
    nodes, w = simplex_quadrature((0.5, 1.5, 1.0), 2)
    p0 = simplex_jacobi((0, 0), (0.5, 1.5, 1.0), nodes)
    assert abs((p0**2) @ w - 1) < 1e-10


def test_degree_cap():
    with pytest.raises(ValueError):
        simplex_jacobi((70,), (0.5, 0.5), [0.3])


@pytest.mark.parametrize("kappa", KAPPAS)
def test_eigenfunctions_fd(kappa):
    rng = np.random.default_rng(1)
    n = len(kappa)
    pts = rng.dirichlet(np.full(n, 3.0), size=20)[:, :-1]
    basis = SimplexJacobiBasis(kappa, 3)
    for tau, deg in zip(basis.indices, basis.degrees):
        ev = eigenvalue(deg, kappa)
        for p in pts:
            lhs = apply_generator_fd(kappa, lambda x: float(simplex_jacobi(tau, kappa, x)), p)
            rhs = ev * simplex_jacobi(tau, kappa, p)
            assert abs(lhs - rhs) <= 1e-4 * max(1.0, abs(ev) * 10)


def test_generator_on_constants_and_linear():
    kappa = (0.5, 0.5, 0.5)
    lam = np.array([0.2, 0.3])
    assert abs(apply_generator_fd(kappa, lambda x: 1.0, lam)) < 1e-8
    got = apply_generator_fd(kappa, lambda x: x[0], lam)
    assert got == pytest.approx((0.5 + 0.5) - (1.5 + 1.5) * 0.2, abs=1e-7)


def test_generator_boundary_guard():
    with pytest.raises(DomainError):
        apply_generator_fd((0.5, 0.5), lambda x: x[0], [1e-5])


def test_lift_consistency():
    kappa = (0.5, 1.5, 1.0)
    f = lambda x: x[0] ** 2 * x[1] + 0.3 * x[1]
    lam = np.array([0.25, 0.35])
    full = np.append(lam, 1 - lam.sum())
    a = apply_generator_fd(kappa, f, lam)
    b = apply_lifted_generator_fd(kappa, lambda y: f(y[:2]), full)
    assert abs(a - b) < 1e-5


@pytest.mark.parametrize("kappa", KAPPAS)
@pytest.mark.parametrize("t", [0.25, 0.5, 1.0])
def test_kernel_mass(kappa, t):
    n = len(kappa)
    x = np.full(n - 1, 1.0 / (n + 1))
    q = heat_kernel(kappa, t, x, x)
    nodes, w = simplex_quadrature(kappa, q.truncation.max_degree + 2)
    mass = heat_kernel(kappa, t, x, nodes, trunc=q.truncation).value @ w
    assert abs(mass - 1) < 1e-6


def test_kernel_positive_and_large_t():
    rng = np.random.default_rng(2)
    for _ in range(10):
        x, y = rng.dirichlet([1, 1, 1], size=2)[:, :2]
        assert heat_kernel((0.5, 0.5, 0.5), 0.25, x, y).value > 0
    assert heat_kernel((0.5, 0.5), 20.0, [0.3], [0.6]).value == pytest.approx(1.0, abs=1e-12)


def test_chapman_kolmogorov():
    kappa = (0.5, 0.5)
    x, y = np.array([0.3]), np.array([0.8])
    trunc = heat_kernel(kappa, 0.5, x, y).truncation
    nodes, w = simplex_quadrature(kappa, 2 * trunc.max_degree + 2)
    lhs = np.sum(heat_kernel(kappa, 0.5, x, nodes, trunc=trunc).value
                 * heat_kernel(kappa, 0.5, y, nodes, trunc=trunc).value * w)
    assert abs(lhs - heat_kernel(kappa, 1.0, x, y).value) < 1e-6


def test_tolerance_not_met_at_tiny_t():
    with pytest.raises(ToleranceNotMet) as info:
        heat_kernel((0.5, 0.5, 0.5), 1e-3, [0.3, 0.3], [0.2, 0.5])
    assert info.value.achieved > 0
