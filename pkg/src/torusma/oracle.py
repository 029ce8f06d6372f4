"""Cross-validation tools: manufactured solutions and a dense direct solver.

Manufactured cases pick the potential first and derive the data through the
forward map, so the exact solution is known to rounding.  The dense solver
shares every operator definition with the spectral path but factors the full
linear system, isolating Krylov or preconditioner bugs.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import FourierTerm, PeriodicGrid, ScalarField, fourier_field, zeros
from .forms import MetricField
from .ma_core import Family, MAProblem, forward_density, perturbed_metric
from .continuity import ConeExit, NewtonConfig
from .elliptic import LinearOperatorSpec, NoConvergence, apply_operator
from .ma_core import cone_min_eig, residual

DENSE_POINT_LIMIT = 4096


class SingularMatrix(Exception):
    """Direct factorization hit a singular linear system."""


@dataclass(frozen=True)
class ManufacturedCase:
    """A potential given in closed form plus the family it should solve."""

    name: str
    n: int
    family: Family
    t: float
    phi_terms: tuple[FourierTerm, ...]

    def default_resolution(self) -> int:
        return 64 if self.n == 1 else 32

    def phi_star(self, grid: PeriodicGrid) -> ScalarField:
        return fourier_field(grid, self.phi_terms)

    def problem(self, grid: PeriodicGrid) -> MAProblem:
        """Derive the data field so phi_star solves this family at t."""
        if grid.n_complex != self.n:
            raise ValueError(f"case {self.name} needs n={self.n}")
        phi = self.phi_star(grid)
        fd = forward_density(phi, MAProblem(grid, zeros(grid), self.family,
                                            self.t))
        if self.family is Family.NEG_C1:
            F = ScalarField(grid, (fd.values - phi.values) / self.t)
        elif self.family is Family.CALABI_YAU:
            # volume conservation makes the renormalization constant vanish
            F = ScalarField(grid, fd.values / max(self.t, 1e-300))
        else:
            F = ScalarField(grid, fd.values + self.t * phi.values)
        return MAProblem(grid, F, self.family, self.t)

    def aligned_phi_star(self, grid: PeriodicGrid) -> ScalarField:
        """phi_star in the gauge the solver returns (mean zero when c = 0)."""
        phi = self.phi_star(grid)
        if self.family.zeroth_order_coeff(self.t) == 0.0:
            return ScalarField(grid, phi.values - phi.values.mean())
        return phi


def registry() -> list[ManufacturedCase]:
    rng = np.random.default_rng(42)
    band = []
    for _ in range(5):
        modes = tuple(int(m) for m in rng.integers(-2, 3, 4))
        if all(m == 0 for m in modes):
            modes = (1, 0, 0, 0)
        amp = 0.003 * float(rng.uniform(0.3, 1.0))
        band.append(FourierTerm("cos", modes, amp,
                                float(rng.uniform(0.0, 2 * np.pi))))
    return [
        ManufacturedCase("zero-neg-c1", 1, Family.NEG_C1, 1.0, ()),
        ManufacturedCase("zero-cy", 1, Family.CALABI_YAU, 1.0, ()),
        ManufacturedCase("zero-fano", 1, Family.FANO, 0.5, ()),
        ManufacturedCase("n1-single-mode", 1, Family.NEG_C1, 1.0,
                         (FourierTerm("cos", (1, 0), 0.05),)),
        ManufacturedCase("n1-two-mode", 1, Family.CALABI_YAU, 1.0,
                         (FourierTerm("cos", (1, 0), 0.05),
                          FourierTerm("sin", (0, 1), 0.03))),
        ManufacturedCase("n2-single-mode", 2, Family.NEG_C1, 1.0,
                         (FourierTerm("cos", (1, 0, 0, 0), 0.05),)),
        ManufacturedCase("n2-two-mode", 2, Family.CALABI_YAU, 1.0,
                         (FourierTerm("cos", (1, 0, 0, 0), 0.05),
                          FourierTerm("cos", (0, 0, 0, 1), 0.05))),
        ManufacturedCase("n2-random-band", 2, Family.FANO, 0.5, tuple(band)),
    ]


def case_by_name(name: str) -> ManufacturedCase:
    for case in registry():
        if case.name == name:
            return case
    raise KeyError(f"no manufactured case named {name!r}")


def _kernel_basis(grid: PeriodicGrid) -> np.ndarray:
    """Real basis of the c = 0 kernel: constants and the Nyquist-killed modes.

    Every first-derivative multiplier vanishes at frequencies 0 and N/2, so
    the 2^(2n) sign-pattern fields prod_a (-1)^(i_a) over axis subsets are
    annihilated exactly by the operator.
    """
    import itertools
    cols = []
    for subset in itertools.product((False, True), repeat=grid.real_dim):
        v = np.ones(grid.shape)
        for axis, on in enumerate(subset):
            if on:
                idx = np.arange(grid.resolution)
                shape = [1] * grid.real_dim
                shape[axis] = grid.resolution
                v = v * ((-1.0) ** idx).reshape(shape)
        cols.append(v.ravel())
    return np.stack(cols, axis=1)


def _assemble_dense(spec: LinearOperatorSpec) -> np.ndarray:
    """Full matrix of the linear operator, column by column in batches."""
    grid = spec.grid
    P = grid.point_count
    A = np.empty((P, P))
    chunk = max(1, (1 << 22) // P)
    eye = np.eye(P)
    for start in range(0, P, chunk):
        block = eye[start:start + chunk].reshape((-1,) + grid.shape)
        out = apply_operator(spec, block)
        A[:, start:start + chunk] = out.reshape(-1, P).T
    return A


def dense_newton(problem: MAProblem, phi_init: ScalarField | None = None,
                 tol: float = 1e-10, max_iters: int = 50,
                 cfg: NewtonConfig | None = None) -> ScalarField:
    """Newton iteration with explicitly assembled, directly factored steps.

    For the c = 0 gauge the mean is pinned through a bordered system
    instead of projecting, exercising a genuinely different linear algebra
    path from the Krylov solver.
    """
    grid = problem.grid
    P = grid.point_count
    if P > DENSE_POINT_LIMIT:
        raise ValueError(f"dense solver limited to {DENSE_POINT_LIMIT} points, "
                         f"got {P}")
    cfg = cfg or NewtonConfig()
    phi = phi_init if phi_init is not None else zeros(grid)
    c = problem.family.zeroth_order_coeff(problem.t)
    gauge = c == 0.0
    if gauge:
        phi = ScalarField(grid, phi.values - phi.values.mean())

    r = residual(phi, problem)
    resid = float(np.abs(r.values).max())
    for _ in range(max_iters):
        if resid <= tol:
            return phi
        gp = perturbed_metric(phi, problem)
        spec = LinearOperatorSpec(gp, c, background_det=problem.metric.det)
        A = _assemble_dense(spec)
        b = -r.values.ravel()
        try:
            if gauge:
                w = spec.weight.ravel()
                b = b - (b * w).mean() / w.mean()
                D = _kernel_basis(grid)
                K = D.shape[1]
                M = np.zeros((P + K, P + K))
                M[:P, :P] = A
                M[:P, P:] = D
                M[P:, :P] = D.T / P
                x = np.linalg.solve(M, np.r_[b, np.zeros(K)])[:P]
            else:
                x = np.linalg.solve(A, b)
        except np.linalg.LinAlgError as e:
            raise SingularMatrix(str(e)) from e
        step = x.reshape(grid.shape)

        alpha = 1.0
        for _ in range(cfg.max_halvings + 1):
            cand = ScalarField(grid, phi.values + alpha * step)
            if gauge:
                cand = ScalarField(grid, cand.values - cand.values.mean())
            if cone_min_eig(cand, problem) > cfg.cone_margin:
                r_cand = residual(cand, problem)
                resid_cand = float(np.abs(r_cand.values).max())
                if resid_cand < resid or resid_cand <= tol:
                    phi, r, resid = cand, r_cand, resid_cand
                    break
            alpha *= cfg.damping
        else:
            raise ConeExit(f"dense solver found no acceptable step "
                           f"at residual {resid:.3e}")
    raise NoConvergence(max_iters, resid, what="dense newton")
