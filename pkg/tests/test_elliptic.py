import numpy as np
import pytest

from torusma.grid import (FourierTerm, PeriodicGrid, ScalarField, constant,
                          fourier_field, random_fourier_terms, zeros)
from torusma.forms import identity_metric
from torusma.ma_core import Family, MAProblem, perturbed_metric
from torusma.elliptic import (IncompatibleRHS, LinearOperatorSpec,
                              NoConvergence, SpectrumHit, apply_operator,
                              green_apply, solve, spectral_gap)


def _flat_spec(n=1, N=32, c=0.0):
    return LinearOperatorSpec(identity_metric(PeriodicGrid(n, N)), c)


def _variable_spec(n=1, N=32, c=0.0, amp=0.05, seed=12):
    grid = PeriodicGrid(n, N)
    rng = np.random.default_rng(seed)
    phi = fourier_field(grid, random_fourier_terms(grid.real_dim, 2, amp, rng))
    prob = MAProblem(grid, zeros(grid), Family.CALABI_YAU, 1.0)
    return LinearOperatorSpec(perturbed_metric(phi, prob), c)


def test_apply_operator_flat_single_mode():
    spec = _flat_spec(c=-1.0)
    grid = spec.grid
    psi = fourier_field(grid, [FourierTerm("cos", (1, 0), 1.0)])
    out = apply_operator(spec, psi.values)
    assert np.abs(out + (np.pi ** 2 + 1.0) * psi.values).max() < 1e-12


def test_solve_flat_exact():
    spec = _flat_spec(c=0.0)
    grid = spec.grid
    psi_exact = fourier_field(grid, [FourierTerm("cos", (1, 0), 1.0)])
    rhs = ScalarField(grid, -np.pi ** 2 * psi_exact.values)
    psi = solve(spec, rhs, tol=1e-12)
    assert np.abs(psi.values - psi_exact.values).max() < 1e-10


def test_solve_zero_rhs_returns_zero():
    psi = solve(_flat_spec(), zeros(PeriodicGrid(1, 32)))
    assert np.all(psi.values == 0.0)


def test_solve_variable_coefficient_residual():
    spec = _variable_spec(c=-1.0)
    grid = spec.grid
    rng = np.random.default_rng(5)
    rhs = fourier_field(grid, random_fourier_terms(2, 5, 1.0, rng))
    log = []
    psi = solve(spec, rhs, tol=1e-11, log=log)
    resid = np.abs(apply_operator(spec, psi.values) - rhs.values).max()
    assert resid <= 1e-11 * np.abs(rhs.values).max()
    assert log and log[0][0] == "solve"


def test_solve_gauge_mean_zero_and_self_adjoint():
    spec = _variable_spec(c=0.0)
    grid = spec.grid
    rng = np.random.default_rng(6)
    rhs = fourier_field(grid, random_fourier_terms(2, 4, 1.0, rng))
    psi = solve(spec, rhs, tol=1e-11)
    assert abs(psi.values.mean()) < 1e-12
    # L is self-adjoint in the det(g') inner product
    u = fourier_field(grid, random_fourier_terms(2, 3, 1.0,
                                                 np.random.default_rng(7)))
    v = fourier_field(grid, random_fourier_terms(2, 3, 1.0,
                                                 np.random.default_rng(8)))
    w = spec.weight
    lhs = (apply_operator(spec, u.values) * v.values * w).mean()
    rhs2 = (u.values * apply_operator(spec, v.values) * w).mean()
    assert abs(lhs - rhs2) < 1e-12 * max(abs(lhs), 1.0)


def test_incompatible_rhs_raises():
    spec = _flat_spec(c=0.0)
    with pytest.raises(IncompatibleRHS):
        solve(spec, constant(spec.grid, 1.0))


def test_no_convergence_reports_iterations():
    spec = _variable_spec(c=-1.0)
    rng = np.random.default_rng(9)
    rhs = fourier_field(spec.grid, random_fourier_terms(2, 6, 1.0, rng))
    with pytest.raises(NoConvergence) as err:
        solve(spec, rhs, tol=1e-14, max_iters=1)
    assert err.value.iterations >= 1
    assert err.value.final_residual > 0


def test_spectrum_hit_on_resonant_coefficient():
    # c = pi^2 equals the first eigenvalue of -Laplacian on the flat torus
    spec = _flat_spec(c=np.pi ** 2)
    rhs = fourier_field(spec.grid, [FourierTerm("cos", (1, 0), 1.0)])
    with pytest.raises(SpectrumHit):
        solve(spec, rhs)


def test_green_apply_inverts_laplacian():
    grid = PeriodicGrid(1, 32)
    h = fourier_field(grid, [FourierTerm("cos", (1, 0), 1.0)]) + 2.0
    u = green_apply(h)
    assert abs(u.values.mean()) < 1e-13
    expected = -h.values / np.pi ** 2 + 2.0 / np.pi ** 2
    assert np.abs(u.values - expected).max() < 1e-12


@pytest.mark.parametrize("n,N", [(1, 32), (2, 8)])
def test_spectral_gap_flat(n, N):
    gap = spectral_gap(identity_metric(PeriodicGrid(n, N)), tol=1e-9)
    assert gap == pytest.approx(np.pi ** 2, rel=1e-6)


def test_spectral_gap_scaled_metric():
    # tr(g'^{-1} Hess) with g' = 2 g halves every eigenvalue
    gap = spectral_gap(identity_metric(PeriodicGrid(1, 32), 2.0), tol=1e-9)
    assert gap == pytest.approx(np.pi ** 2 / 2.0, rel=1e-6)
