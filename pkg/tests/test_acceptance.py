"""Acceptance checks, one per numbered criterion, each printing a verdict line.

Heavy artifacts (full-resolution manufactured solves) are shared through
module-scoped fixtures so the suite stays within a few minutes end to end.
"""
import numpy as np
import pytest

from torusma.grid import (FourierTerm, PeriodicGrid, ScalarField,
                          fourier_field, integrate, random_fourier_terms)
from torusma.forms import (HermitianField, MetricField, complex_hessian,
                           constant_metric, identity_metric,
                           mixed_top_identity_check, ricci_form,
                           schwarz_trace_check)
from torusma.ma_core import (Family, MAProblem, directional_derivative_check,
                             energy_identity_terms, perturbed_metric,
                             residual)
from torusma.elliptic import apply_operator, green_apply, LinearOperatorSpec, \
    spectral_gap
from torusma.continuity import NewtonConfig, newton_solve, run_path
from torusma.estimates import (c3_refinement_study, log_trace_inequality,
                               moser_ladder_report, uniqueness_check)
from torusma.oracle import dense_newton, registry
from torusma import cli
from torusma.grid import resample


def _verdict(num: int, label: str, ok: bool) -> None:
    print(f"criterion {num:02d} {label}: {'PASS' if ok else 'FAIL'}")


@pytest.fixture(scope="module")
def solved_registry():
    """Every manufactured case solved at its full resolution from a cold start."""
    out = {}
    for case in registry():
        grid = PeriodicGrid(case.n, case.default_resolution())
        prob = case.problem(grid)
        info = {}
        phi = newton_solve(prob, info=info)
        out[case.name] = (case, grid, prob, phi, info)
    return out


def test_criterion_01_manufactured_recovery(solved_registry):
    worst = 0.0
    most_iters = 0
    for case, grid, prob, phi, info in solved_registry.values():
        err = float(np.abs(phi.values - case.aligned_phi_star(grid).values).max())
        worst = max(worst, err)
        most_iters = max(most_iters, info["iterations"])
    ok = worst < 1e-8 and most_iters <= 10
    _verdict(1, "manufactured recovery", ok)
    assert ok, (worst, most_iters)


def test_criterion_02_oracle_equivalence():
    worst = 0.0
    for case in registry():
        # dense factorization is limited to 4096 unknowns, which caps the
        # four-real-dimensional cases at 8 points per axis
        N = 16 if case.n == 1 else 8
        prob = case.problem(PeriodicGrid(case.n, N))
        phi_s = newton_solve(prob)
        phi_d = dense_newton(prob)
        worst = max(worst, float(np.abs(phi_s.values - phi_d.values).max()))
    ok = worst < 1e-8
    _verdict(2, "spectral vs dense oracle", ok)
    assert ok, worst


def test_criterion_03_maximum_principle():
    grid = PeriodicGrid(1, 64)
    F = fourier_field(grid, [FourierTerm("cos", (1, 0), 0.5)])
    path = run_path(grid, F, Family.NEG_C1)
    supF = float(np.abs(F.values).max())
    bounds = [max(r.sup_phi, -r.inf_phi) <= r.t * supF + 1e-8
              for r in path.records]
    ok = path.completed and len(path.records) == 21 and all(bounds)
    _verdict(3, "maximum principle along path", ok)
    assert ok, (path.completed, sum(bounds))


def test_criterion_04_volume_conservation(solved_registry):
    worst = 0.0
    for case, grid, prob, phi, _ in solved_registry.values():
        gp = perturbed_metric(phi, prob)
        vol = integrate(ScalarField(grid, gp.det))
        vol0 = integrate(ScalarField(grid, prob.metric.det))
        worst = max(worst, abs(vol - vol0) / abs(vol0))
    ok = worst < 1e-10
    _verdict(4, "volume conservation", ok)
    assert ok, worst


def test_criterion_05_prescribed_ricci_decay():
    terms = (FourierTerm("cos", (7, 0), 0.008),
             FourierTerm("sin", (0, 5), 0.0056, 0.4),
             FourierTerm("cos", (4, 3), 0.004, 1.1))
    cfg = NewtonConfig(tol_residual=1e-12)

    def resid_sup(N):
        grid = PeriodicGrid(1, N)
        prob = MAProblem(grid, fourier_field(grid, terms),
                         Family.CALABI_YAU, 1.0)
        phi = newton_solve(prob, cfg=cfg)
        # the aliasing error only shows on a finer evaluation lattice
        ge = PeriodicGrid(1, 2 * N)
        prob_e = MAProblem(ge, fourier_field(ge, terms),
                           Family.CALABI_YAU, 1.0)
        gp = perturbed_metric(resample(phi, ge), prob_e)
        r = ricci_form(gp).entries + complex_hessian(prob_e.data_field()).entries
        return float(np.abs(r).max())

    r64, r128 = resid_sup(64), resid_sup(128)
    ok = r64 < 1e-7 and r128 <= r64 / 10.0
    _verdict(5, "prescribed Ricci refinement decay", ok)
    assert ok, (r64, r128)


def test_criterion_06_energy_identity():
    terms = (FourierTerm("cos", (1, 0), 0.8), FourierTerm("sin", (0, 1), 0.5),
             FourierTerm("cos", (2, 1), 0.3, 0.7))

    def identity_stats(N):
        grid = PeriodicGrid(1, N)
        prob = MAProblem(grid, fourier_field(grid, terms),
                         Family.CALABI_YAU, 1.0)
        phi = newton_solve(prob)
        t = energy_identity_terms(phi, prob.metric, hess_sign=-1.0)
        scale = max(abs(t["lhs"]), abs(t["transport"]), 1.0)
        return t["identity_error"] / scale, t["transport"] - t["lower_bound"]

    rel64, gap64 = identity_stats(64)
    rel128, _ = identity_stats(128)
    # discrete summation by parts is exact, so refinement normally lands on
    # the rounding floor rather than showing a measurable decay rate
    floor = 1e-14
    decays = rel128 <= max(rel64 / 10.0, floor)
    ok = rel64 < 1e-9 and decays and gap64 >= -1e-10
    _verdict(6, "energy identity and lower bound", ok)
    assert ok, (rel64, rel128, gap64)


def test_criterion_07_wedge_identities():
    grid = PeriodicGrid(2, 8)
    rng = np.random.default_rng(101)
    g = constant_metric(grid, np.array([[1.5, 0.2 + 0.1j],
                                        [0.2 - 0.1j, 1.2]]))

    def random_pd():
        e = np.zeros(grid.shape + (2, 2), dtype=complex)
        e[..., 0, 0] = rng.uniform(0.5, 2.0, grid.shape)
        e[..., 1, 1] = rng.uniform(0.5, 2.0, grid.shape)
        z = 0.3 * (rng.standard_normal(grid.shape)
                   + 1j * rng.standard_normal(grid.shape))
        e[..., 0, 1] = z
        e[..., 1, 0] = np.conj(z)
        return HermitianField(grid, e)

    ok = True
    for _ in range(100):
        entry = mixed_top_identity_check(random_pd(), random_pd(), g)
        ok = ok and entry.passed
    _verdict(7, "mixed wedge identities", ok)
    assert ok


def test_criterion_08_schwarz_trace(solved_registry):
    worst = np.inf
    for case, grid, prob, phi, _ in solved_registry.values():
        gp = perturbed_metric(phi, prob)
        entry = schwarz_trace_check(gp, prob.metric)
        worst = min(worst, entry.rhs - entry.lhs)
    ok = worst >= -1e-12
    _verdict(8, "Schwarz trace inequality", ok)
    assert ok, worst


def test_criterion_09_log_trace_margin(solved_registry):
    worst = 0.0
    for case, grid, prob, phi, _ in solved_registry.values():
        worst = max(worst, log_trace_inequality(phi, prob).lhs)

    def neg_margin(case, N):
        prob = case.problem(PeriodicGrid(1, N))
        return log_trace_inequality(newton_solve(prob), prob).lhs

    # refinement study on the one-complex-dimensional cases; the margin of
    # these band-limited solutions is already exact at N=64, so decay is
    # accepted when both sides sit on the rounding floor
    floor = 1e-12
    decays = True
    for case in registry():
        if case.n != 1 or not case.phi_terms:
            continue
        m64, m128 = neg_margin(case, 64), neg_margin(case, 128)
        decays = decays and m128 <= max(m64 / 10.0, floor)
    ok = worst <= 1e-6 and decays
    _verdict(9, "log-trace differential inequality", ok)
    assert ok, worst


def test_criterion_10_uniqueness():
    grid = PeriodicGrid(1, 64)
    F = fourier_field(grid, [FourierTerm("cos", (1, 0), 0.3),
                             FourierTerm("sin", (0, 1), 0.2, 0.6)])
    e1 = uniqueness_check(MAProblem(grid, F, Family.CALABI_YAU, 1.0))
    grid2 = PeriodicGrid(2, 16)
    F2 = fourier_field(grid2, [FourierTerm("cos", (1, 0, 0, 0), 0.05)])
    e2 = uniqueness_check(MAProblem(grid2, F2, Family.CALABI_YAU, 1.0))
    ok = e1.passed and e2.passed
    _verdict(10, "two-start uniqueness", ok)
    assert ok, (e1.lhs, e2.lhs)


def test_criterion_11_moser_ladder():
    ok = True
    for n, N in ((1, 64), (2, 16)):
        grid = PeriodicGrid(n, N)
        modes = (1, 0) if n == 1 else (1, 0, 0, 0)
        F = fourier_field(grid, [FourierTerm("cos", modes, 4e-4)])
        phi = newton_solve(MAProblem(grid, F, Family.CALABI_YAU, 1.0))
        entries, _ = moser_ladder_report(phi, F, q=n + 1)
        ok = ok and all(e.passed for e in entries)
    _verdict(11, "Moser ladder convergence", ok)
    assert ok


def test_criterion_12_spectral_gap_and_guard(tmp_path):
    gap1 = spectral_gap(identity_metric(PeriodicGrid(1, 32)), tol=1e-9)
    gap2 = spectral_gap(identity_metric(PeriodicGrid(2, 8)), tol=1e-9)
    gaps_ok = (abs(gap1 - np.pi ** 2) < 1e-6 * np.pi ** 2
               and abs(gap2 - np.pi ** 2) < 1e-6 * np.pi ** 2)
    code = cli.main(["path", "--n", "1", "--N", "16", "--family", "fano",
                     "--f", "cos:1,0:0.05", "--t-max", "15",
                     "--schedule-points", "31", "--out", str(tmp_path)])
    import json
    summary = json.loads((tmp_path / "path.json").read_text())
    guard_ok = code == 3 and "SpectrumHit" in summary["failure"]
    ok = gaps_ok and guard_ok
    _verdict(12, "spectral gap and Fano guard", ok)
    assert ok, (gap1, gap2, code)


def test_criterion_13_linearization():
    grid = PeriodicGrid(1, 32)
    rng = np.random.default_rng(77)
    ratios = []
    for _ in range(20):
        F = fourier_field(grid, random_fourier_terms(2, 2, 0.1, rng))
        prob = MAProblem(grid, F, Family.CALABI_YAU, 1.0)
        phi = fourier_field(grid, random_fourier_terms(2, 2, 0.02, rng))
        psi = fourier_field(grid, random_fourier_terms(2, 2, 1.0, rng))
        e1 = directional_derivative_check(phi, psi, prob, h=1e-3).lhs
        e2 = directional_derivative_check(phi, psi, prob, h=5e-4).lhs
        ratios.append(e1 / e2)
    richardson_ok = all(3.5 <= r <= 4.5 for r in ratios)

    # Green representation: u = G(h) satisfies Laplacian u = h - mean(h)
    h = fourier_field(grid, random_fourier_terms(2, 4, 1.0, rng))
    u = green_apply(h)
    spec = LinearOperatorSpec(identity_metric(grid), 0.0)
    resid = np.abs(apply_operator(spec, u.values)
                   - (h.values - h.values.mean())).max()
    ok = richardson_ok and resid < 1e-10
    _verdict(13, "linearization and Green identity", ok)
    assert ok, (min(ratios), max(ratios), resid)


def test_criterion_14_c3_stability():
    grid1 = PeriodicGrid(1, 64)
    F1 = fourier_field(grid1, [FourierTerm("cos", (1, 0), 0.3),
                               FourierTerm("sin", (0, 1), 0.2, 0.5)])
    e1 = c3_refinement_study(grid1, F1, Family.CALABI_YAU)
    grid2 = PeriodicGrid(2, 16)
    F2 = fourier_field(grid2, [FourierTerm("cos", (1, 0, 0, 0), 0.1)])
    e2 = c3_refinement_study(grid2, F2, Family.NEG_C1)
    ok = e1.passed and e2.passed
    _verdict(14, "C3 tensor refinement stability", ok)
    assert ok, (e1, e2)
