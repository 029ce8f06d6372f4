"""Linear elliptic solves for the operators tr(g'^{-1} Hess) + c on the torus.

The variable-coefficient operator is applied spectrally and inverted by GMRES,
preconditioned with the exact inverse of the constant-coefficient operator at
the grid-averaged inverse metric.  The flat Green operator and a spectral-gap
estimator (inverse power iteration) live here too.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import fft as _sfft
from scipy.sparse.linalg import LinearOperator, gmres

from .grid import PeriodicGrid, ScalarField
from .forms import MetricField

SPECTRUM_TOL = 1e-8


class IncompatibleRHS(Exception):
    """c = 0 solve with right-hand side not orthogonal to the constant kernel."""


class NoConvergence(Exception):
    def __init__(self, iterations: int, final_residual: float, what: str = "solve"):
        self.iterations = iterations
        self.final_residual = final_residual
        super().__init__(f"{what} did not converge after {iterations} iterations "
                         f"(residual {final_residual:.3e})")


class SpectrumHit(Exception):
    """Zeroth-order coefficient c sits on (or too near) the operator spectrum."""

    def __init__(self, c: float, gap: float):
        self.c = float(c)
        self.gap = float(gap)
        super().__init__(f"coefficient c={self.c:.6g} conflicts with spectrum "
                         f"(nearest eigenvalue estimate {self.gap:.6g})")


@dataclass(frozen=True)
class LinearOperatorSpec:
    """Operator L psi = tr(g'^{-1} Hess psi) + c psi with its natural volume weight.

    Inner products and compatibility integrals use the density
    det(g') / det(g_background); for a flat unit background that is det(g').
    """

    metric: MetricField
    c: float
    background_det: np.ndarray | None = None

    @property
    def grid(self) -> PeriodicGrid:
        return self.metric.grid

    @cached_property
    def weight(self) -> np.ndarray:
        if self.background_det is None:
            return self.metric.det
        return self.metric.det / self.background_det

    @cached_property
    def mean_inverse(self) -> np.ndarray:
        """Grid average of g'^{-1}, the preconditioner's coefficient matrix."""
        n = self.grid.n_complex
        axes = tuple(range(self.grid.real_dim))
        return self.metric.inverse.mean(axis=axes)

    @cached_property
    def preconditioner_symbol(self) -> np.ndarray:
        """Fourier symbol of the averaged constant-coefficient operator + c."""
        g = self.grid
        n = g.n_complex
        A = self.mean_inverse
        sym = np.zeros(g.shape)
        for j in range(n):
            for l in range(n):
                sym -= (A[l, j] * g.holo_multipliers[j]
                        * np.conj(g.holo_multipliers[l])).real
        return sym + self.c


def apply_operator(spec: LinearOperatorSpec, values: np.ndarray) -> np.ndarray:
    """L values, vectorized over any leading batch axes."""
    g = spec.grid
    n = g.n_complex
    inv = spec.metric.inverse
    nd = g.real_dim
    axes = tuple(range(np.ndim(values) - nd, np.ndim(values)))
    spec_hat = _sfft.fftn(np.asarray(values, dtype=complex), axes=axes, workers=-1)
    out = spec.c * np.asarray(values, dtype=float).astype(complex)
    for j in range(n):
        for l in range(j, n):
            mult = g.holo_multipliers[j] * g.antiholo_multipliers[l]
            H = _sfft.ifftn(mult * spec_hat, axes=axes, workers=-1)
            if l == j:
                out += inv[..., l, j] * H
            else:
                # Hermitian symmetry: the (l, j) entry is the conjugate
                out += inv[..., l, j] * H + np.conj(inv[..., l, j] * H)
    return out.real


def _check_constant_coeff_spectrum(spec: LinearOperatorSpec) -> None:
    if spec.c <= 0:
        return
    sym = spec.preconditioner_symbol
    mask = np.ones(spec.grid.shape, dtype=bool)
    mask[(0,) * spec.grid.real_dim] = False
    nearest = float(np.abs(sym[mask]).min())
    if nearest < SPECTRUM_TOL * max(1.0, spec.c):
        raise SpectrumHit(spec.c, spec.c - nearest)


def solve(spec: LinearOperatorSpec, rhs: ScalarField, tol: float = 1e-10,
          max_iters: int = 400, log: list | None = None) -> ScalarField:
    """Solve L psi = rhs to relative sup-norm tolerance tol.

    For c = 0 the right-hand side is projected onto the range (weighted
    mean removed) and the returned psi carries the mean-zero gauge.
    """
    g = spec.grid
    b = rhs.values.copy()
    scale = float(np.abs(b).max())
    if scale == 0.0:
        return ScalarField(g, np.zeros(g.shape))
    _check_constant_coeff_spectrum(spec)

    gauge = spec.c == 0.0
    dead = g.flat_laplace_symbol == 0.0  # constants + Nyquist-killed modes

    def dealias(v: np.ndarray) -> np.ndarray:
        hat = _sfft.fftn(v.astype(complex), workers=-1)
        hat[dead] = 0.0
        return _sfft.ifftn(hat, workers=-1).real

    if gauge:
        w = spec.weight
        shift = float((b * w).mean() / w.mean())
        if abs(shift) > 0.9 * scale:
            raise IncompatibleRHS(
                f"rhs weighted mean {shift:.3e} dominates sup-norm {scale:.3e}")
        # modes annihilated by every derivative are outside the operator range
        b = dealias(b - shift)

    sym = spec.preconditioner_symbol
    zero = (0,) * g.real_dim
    inv_sym = np.zeros(g.shape)
    nz = sym != 0.0
    inv_sym[nz] = 1.0 / sym[nz]
    if gauge:
        inv_sym[zero] = 0.0

    def precond(v: np.ndarray) -> np.ndarray:
        u = v.reshape(g.shape)
        out = _sfft.ifftn(inv_sym * _sfft.fftn(u, workers=-1), workers=-1).real
        return out.ravel()

    def matvec(v: np.ndarray) -> np.ndarray:
        out = apply_operator(spec, v.reshape(g.shape))
        if gauge:
            out = dealias(out)
        return out.ravel()

    N = g.point_count
    A = LinearOperator((N, N), matvec=matvec, dtype=float)
    M = LinearOperator((N, N), matvec=precond, dtype=float)

    n_iters = 0

    def _count(_):
        nonlocal n_iters
        n_iters += 1

    x = np.zeros(N)
    resid = scale
    target = tol * scale
    rtol = 0.25 * tol
    # GMRES rounds checked against the sup-norm criterion; the inner 2-norm
    # tolerance tightens whenever it proves too optimistic
    for _ in range(8):
        x, _info = gmres(A, b.ravel(), x0=x, M=M, rtol=rtol,
                         atol=0.0, restart=40,
                         maxiter=max(1, max_iters // 40),
                         callback=_count, callback_type="pr_norm")
        if gauge:
            x = x - x.mean()
        resid = float(np.abs(matvec(x) - b.ravel()).max())
        if resid <= target:
            break
        if n_iters >= max_iters:
            break
        rtol = max(1e-15, rtol * min(0.1, 0.25 * target / resid))
    if resid > target:
        raise NoConvergence(n_iters, resid)
    if log is not None:
        log.append(("solve", n_iters, resid))
    return ScalarField(g, x.reshape(g.shape))


def green_apply(h: ScalarField) -> ScalarField:
    """Mean-zero u with (flat Laplacian) u = h - mean(h), by spectral division."""
    g = h.grid
    sym = g.flat_laplace_symbol
    hat = _sfft.fftn(h.values.astype(complex), workers=-1)
    out = np.zeros(g.shape, dtype=complex)
    nz = sym != 0.0
    out[nz] = hat[nz] / sym[nz]
    return ScalarField(g, _sfft.ifftn(out, workers=-1).real)


def spectral_gap(g_prime: MetricField, tol: float = 1e-8,
                 max_iters: int = 200, seed: int = 7) -> float:
    """Smallest nonzero eigenvalue of -tr(g'^{-1} Hess) by inverse power iteration.

    The operator is self-adjoint with respect to the det(g') volume, so the
    iteration orthogonalizes against constants in that inner product and the
    eigenvalue is read off a Rayleigh quotient.
    """
    spec = LinearOperatorSpec(g_prime, 0.0)
    g = spec.grid
    w = spec.weight
    rng = np.random.default_rng(seed)
    u = rng.standard_normal(g.shape)

    def w_project(v: np.ndarray) -> np.ndarray:
        return v - (v * w).mean() / w.mean()

    def w_norm(v: np.ndarray) -> float:
        return float(np.sqrt((v * v * w).mean()))

    u = w_project(u)
    u /= w_norm(u)
    lam_prev = np.inf
    for k in range(max_iters):
        v = solve(spec, ScalarField(g, -u), tol=max(1e-12, tol * 1e-2))
        v = w_project(v.values)
        nrm = w_norm(v)
        if nrm == 0.0:
            raise NoConvergence(k, np.inf, what="spectral_gap")
        u = v / nrm
        Au = -apply_operator(spec, u)
        lam = float((Au * u * w).mean()) / float((u * u * w).mean())
        if abs(lam - lam_prev) <= tol * abs(lam):
            return lam
        lam_prev = lam
    raise NoConvergence(max_iters, abs(lam - lam_prev), what="spectral_gap")
