import numpy as np
import pytest

from torusma.grid import (FourierTerm, PeriodicGrid, ScalarField,
                          fourier_field, integrate, random_fourier_terms,
                          zeros)
from torusma.forms import identity_metric
from torusma.ma_core import (Family, MAProblem, c3_tensor_norm, cone_min_eig,
                             directional_derivative_check,
                             energy_identity_terms, forward_density,
                             linearized_apply, perturbed_metric, residual)


def _problem(n=1, N=32, family=Family.CALABI_YAU, t=1.0, amp=0.1):
    grid = PeriodicGrid(n, N)
    modes = (1, 0) if n == 1 else (1, 0, 0, 0)
    F = fourier_field(grid, [FourierTerm("cos", modes, amp)])
    return MAProblem(grid, F, family, t)


def test_zeroth_order_coefficients():
    assert Family.NEG_C1.zeroth_order_coeff(0.3) == -1.0
    assert Family.CALABI_YAU.zeroth_order_coeff(0.3) == 0.0
    assert Family.FANO.zeroth_order_coeff(0.3) == 0.3


def test_residual_zero_at_trivial_solution():
    for family in Family:
        grid = PeriodicGrid(1, 16)
        prob = MAProblem(grid, zeros(grid), family, 0.5)
        r = residual(zeros(grid), prob)
        assert np.abs(r.values).max() < 1e-14


def test_forward_density_single_mode():
    # det(1 + Hess phi) for phi = a cos(2 pi x) is 1 - a pi^2 cos(2 pi x)
    grid = PeriodicGrid(1, 32)
    a = 0.05
    phi = fourier_field(grid, [FourierTerm("cos", (1, 0), a)])
    prob = MAProblem(grid, zeros(grid), Family.CALABI_YAU, 1.0)
    fd = forward_density(phi, prob)
    x = grid.axis_coordinates(0)
    expected = np.log(1.0 - a * np.pi ** 2 * np.cos(2 * np.pi * x))
    assert np.abs(fd.values - expected * np.ones(grid.shape)).max() < 1e-13


def test_cy_data_field_renormalized():
    # compatibility: integral of e^{data} dV equals the total volume
    prob = _problem(family=Family.CALABI_YAU, amp=0.4)
    data = prob.data_field()
    vol = ScalarField(prob.grid, prob.metric.det)
    lhs = integrate(ScalarField(prob.grid, np.exp(data.values)), vol)
    rhs = integrate(ScalarField(prob.grid, np.ones(prob.grid.shape)), vol)
    assert abs(lhs - rhs) < 1e-12 * abs(rhs)


def test_cone_min_eig_and_perturbed_metric():
    grid = PeriodicGrid(1, 32)
    a = 0.05
    phi = fourier_field(grid, [FourierTerm("cos", (1, 0), a)])
    prob = MAProblem(grid, zeros(grid), Family.CALABI_YAU, 1.0)
    assert cone_min_eig(phi, prob) == pytest.approx(1.0 - a * np.pi ** 2,
                                                    abs=1e-12)
    gp = perturbed_metric(phi, prob)
    assert gp.min_eig.min() > 0


@pytest.mark.parametrize("family", list(Family))
def test_linearization_matches_finite_difference(family):
    rng = np.random.default_rng(17)
    prob = _problem(family=family, t=0.5)
    grid = prob.grid
    phi = fourier_field(grid, random_fourier_terms(2, 2, 0.02, rng))
    psi = fourier_field(grid, random_fourier_terms(2, 2, 1.0, rng))
    entry = directional_derivative_check(phi, psi, prob, h=1e-5)
    # centered difference error is h^2/6 times a third derivative that the
    # mode-2 direction makes of order 1e4
    assert entry.lhs < 1e-5


def test_linearization_richardson_ratio():
    rng = np.random.default_rng(23)
    prob = _problem()
    grid = prob.grid
    phi = fourier_field(grid, random_fourier_terms(2, 2, 0.02, rng))
    psi = fourier_field(grid, random_fourier_terms(2, 2, 1.0, rng))
    e1 = directional_derivative_check(phi, psi, prob, h=1e-3).lhs
    e2 = directional_derivative_check(phi, psi, prob, h=5e-4).lhs
    assert 3.5 <= e1 / e2 <= 4.5


def test_c3_tensor_norm_analytic_n1():
    # n=1 closed form: |S|^2 = (g')^{-3} |phi_zzzbar|^2 with
    # g' = 1 - a pi^2 cos and phi_zzzbar = a pi^3 sin(2 pi x)
    grid = PeriodicGrid(1, 64)
    a = 0.05
    phi = fourier_field(grid, [FourierTerm("cos", (1, 0), a)])
    prob = MAProblem(grid, zeros(grid), Family.CALABI_YAU, 1.0)
    x = grid.axis_coordinates(0) * np.ones(grid.shape)
    gp = 1.0 - a * np.pi ** 2 * np.cos(2 * np.pi * x)
    s2 = gp ** -3 * (a * np.pi ** 3 * np.sin(2 * np.pi * x)) ** 2
    got = c3_tensor_norm(phi, prob).values
    assert np.abs(got - np.sqrt(s2)).max() < 1e-10


@pytest.mark.parametrize("n,N", [(1, 32), (2, 8)])
def test_energy_identity_exact(n, N):
    grid = PeriodicGrid(n, N)
    rng = np.random.default_rng(31)
    phi = fourier_field(grid, random_fourier_terms(grid.real_dim, 2, 0.02, rng))
    g = identity_metric(grid)
    for sign in (-1.0, +1.0):
        terms = energy_identity_terms(phi, g, hess_sign=sign)
        scale = max(abs(terms["lhs"]), abs(terms["transport"]), 1.0)
        assert terms["identity_error"] < 1e-12 * scale
        assert terms["lower_bound"] <= terms["transport"] + 1e-12
        assert terms["pd_ok"]


def test_linearized_apply_flat_laplacian():
    # at phi = 0 the linearization is the flat Laplacian plus c
    grid = PeriodicGrid(1, 32)
    psi = fourier_field(grid, [FourierTerm("cos", (1, 0), 1.0)])
    prob = MAProblem(grid, zeros(grid), Family.NEG_C1, 1.0)
    got = linearized_apply(psi, zeros(grid), prob)
    expected = -(np.pi ** 2 + 1.0) * psi.values
    assert np.abs(got.values - expected).max() < 1e-12
