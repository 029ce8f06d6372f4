"""Pointwise algebra of Hermitian metric fields and real (1,1)-forms.

Wedge products are never formed as alternating tensors: every top-degree
identity is evaluated through traces and determinants, and n is restricted
to {1, 2} so inverses and eigenvalues have closed forms.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import PeriodicGrid, ScalarField, apply_multiplier
from .report import ReportEntry

HERMITIAN_TOL = 1e-12


class PositivityViolation(Exception):
    """A perturbed metric left the Kaehler cone."""

    def __init__(self, point_index, min_eig):
        self.point_index = tuple(int(i) for i in point_index)
        self.min_eig = float(min_eig)
        super().__init__(f"metric not positive definite at {self.point_index}: "
                         f"min eigenvalue {self.min_eig:.3e}")


@dataclass(frozen=True)
class HermitianField:
    """n x n Hermitian matrix per grid point; entries[..., j, k] = A_{j kbar}."""

    grid: PeriodicGrid
    entries: np.ndarray

    def __post_init__(self):
        n = self.grid.n_complex
        e = np.asarray(self.entries, dtype=complex)
        if e.shape != self.grid.shape + (n, n):
            raise ValueError(f"entries shape {e.shape} incompatible with grid")
        scale = max(float(np.abs(e).max()), 1.0)
        dev = np.abs(e - np.conj(np.swapaxes(e, -1, -2))).max()
        if dev > HERMITIAN_TOL * scale:
            raise ValueError(f"matrix field is not Hermitian (deviation {dev:.3e})")
        object.__setattr__(self, "entries", e)


def hermitian_min_max_eig(entries: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form eigenvalue bounds for 1x1 / 2x2 Hermitian matrix fields."""
    n = entries.shape[-1]
    if n == 1:
        lam = entries[..., 0, 0].real
        return lam, lam
    a = entries[..., 0, 0].real
    d = entries[..., 1, 1].real
    m = 0.5 * (a + d)
    r = np.sqrt((0.5 * (a - d)) ** 2 + np.abs(entries[..., 0, 1]) ** 2)
    return m - r, m + r


def _inverse_and_det(entries: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = entries.shape[-1]
    if n == 1:
        det = entries[..., 0, 0].real
        inv = (1.0 / det)[..., None, None].astype(complex)
        return inv, det
    a = entries[..., 0, 0].real
    d = entries[..., 1, 1].real
    b = entries[..., 0, 1]
    det = a * d - (b * np.conj(b)).real
    inv = np.empty_like(entries)
    inv[..., 0, 0] = d / det
    inv[..., 1, 1] = a / det
    inv[..., 0, 1] = -b / det
    inv[..., 1, 0] = -np.conj(b) / det
    return inv, det


@dataclass(frozen=True)
class MetricField:
    """Positive-definite HermitianField with cached inverse and determinant."""

    grid: PeriodicGrid
    entries: np.ndarray
    inverse: np.ndarray
    det: np.ndarray
    min_eig: np.ndarray
    max_eig: np.ndarray

    @classmethod
    def from_hermitian(cls, h: HermitianField, margin: float = 0.0) -> "MetricField":
        lo, hi = hermitian_min_max_eig(h.entries)
        if lo.min() <= margin:
            idx = np.unravel_index(int(lo.argmin()), lo.shape)
            raise PositivityViolation(idx, lo.min())
        inv, det = _inverse_and_det(h.entries)
        return cls(h.grid, h.entries, inv, det, lo, hi)

    def as_hermitian(self) -> HermitianField:
        return HermitianField(self.grid, self.entries)


def identity_metric(grid: PeriodicGrid, scale: float = 1.0) -> MetricField:
    n = grid.n_complex
    e = np.zeros(grid.shape + (n, n), dtype=complex)
    for j in range(n):
        e[..., j, j] = scale
    return MetricField.from_hermitian(HermitianField(grid, e))


def constant_metric(grid: PeriodicGrid, matrix: np.ndarray) -> MetricField:
    n = grid.n_complex
    e = np.broadcast_to(np.asarray(matrix, dtype=complex), grid.shape + (n, n)).copy()
    return MetricField.from_hermitian(HermitianField(grid, e))


def complex_hessian(phi: ScalarField) -> HermitianField:
    """Matrix of mixed second derivatives d^2 phi / dz_j dzbar_k."""
    g = phi.grid
    n = g.n_complex
    H = np.empty(g.shape + (n, n), dtype=complex)
    for j in range(n):
        for k in range(j, n):
            mult = g.holo_multipliers[j] * g.antiholo_multipliers[k]
            Hjk = apply_multiplier(g, phi.values, mult)
            H[..., j, k] = Hjk
            if k != j:
                H[..., k, j] = np.conj(Hjk)
    # symmetrize away rounding in the diagonal imaginary parts
    H = 0.5 * (H + np.conj(np.swapaxes(H, -1, -2)))
    return HermitianField(g, H)


def trace_wrt(alpha: HermitianField | MetricField, g: MetricField) -> ScalarField:
    """tr_g alpha = g^{j kbar} alpha_{j kbar}."""
    val = np.einsum("...lj,...jl->...", g.inverse, alpha.entries).real
    return ScalarField(g.grid, val)


def hermitian_inner(alpha: HermitianField, beta: HermitianField,
                    g: MetricField) -> ScalarField:
    """<alpha, beta>_g = g^{j kbar} g^{p qbar} alpha_{j qbar} beta_{p kbar}."""
    val = np.einsum("...ab,...bc,...cd,...da->...",
                    g.inverse, alpha.entries, g.inverse, beta.entries).real
    return ScalarField(g.grid, val)


def det_ratio(g_prime: MetricField, g: MetricField) -> ScalarField:
    """Monge-Ampere density det(g') / det(g)."""
    return ScalarField(g.grid, g_prime.det / g.det)


def ricci_form(g_prime: MetricField) -> HermitianField:
    """Ric = -dd_bar log det(g'), as a Hermitian matrix field."""
    logdet = ScalarField(g_prime.grid, np.log(g_prime.det))
    h = complex_hessian(logdet)
    return HermitianField(g_prime.grid, -h.entries)


def gradient_energy(phi: ScalarField, g: MetricField) -> ScalarField:
    """|d phi|^2_g = g^{j kbar} (d_j phi)(d_kbar phi), pointwise."""
    gr = phi.grid
    n = gr.n_complex
    dz = [apply_multiplier(gr, phi.values, gr.holo_multipliers[j]) for j in range(n)]
    val = np.zeros(gr.shape)
    for j in range(n):
        for k in range(n):
            val += (g.inverse[..., k, j] * dz[j] * np.conj(dz[k])).real
    return ScalarField(gr, val)


def _mixed_discriminant_lhs(alpha: HermitianField, beta: HermitianField,
                            g: MetricField) -> np.ndarray:
    """Independent evaluation of n(n-1) a^b^omega^{n-2} / omega^n.

    For n = 2 this is the mixed discriminant of the two matrices divided by
    det(g); for n = 1 the (vacuous) second identity degenerates and the first
    one n*alpha^omega^{n-1} = (tr alpha) omega^n is checked instead.
    """
    a, b = alpha.entries, beta.entries
    if g.grid.n_complex == 1:
        return (a[..., 0, 0] / g.entries[..., 0, 0]).real
    mixed = (a[..., 0, 0] * b[..., 1, 1] + a[..., 1, 1] * b[..., 0, 0]
             - a[..., 0, 1] * b[..., 1, 0] - a[..., 1, 0] * b[..., 0, 1]).real
    return mixed / g.det


def mixed_top_identity_check(alpha: HermitianField, beta: HermitianField,
                             g: MetricField) -> ReportEntry:
    """Top-degree wedge identity via trace expansion vs direct discriminant."""
    if g.grid.n_complex == 1:
        lhs = _mixed_discriminant_lhs(alpha, beta, g)
        rhs = trace_wrt(alpha, g).values
        label = "trace identity n*alpha^omega^(n-1)"
    else:
        lhs = _mixed_discriminant_lhs(alpha, beta, g)
        rhs = (trace_wrt(alpha, g).values * trace_wrt(beta, g).values
               - hermitian_inner(alpha, beta, g).values)
        label = "mixed discriminant vs (tr a)(tr b) - <a,b>"
    scale = max(float(np.abs(rhs).max()), 1.0)
    resid = float(np.abs(lhs - rhs).max())
    return ReportEntry(name="wedge_top_identity", lhs=resid, rhs=0.0,
                       tolerance=1e-10 * scale, kind="identity", context=label)


def schwarz_trace_check(g_prime: MetricField, g: MetricField) -> ReportEntry:
    """(tr_g g')(tr_g' g) >= n^2 pointwise."""
    n = g.grid.n_complex
    prod = trace_wrt(g_prime, g).values * trace_wrt(g, g_prime).values
    return ReportEntry(name="schwarz_trace", lhs=float(n * n),
                       rhs=float(prod.min()), tolerance=1e-12,
                       kind="inequality",
                       context="min over grid of (tr_g g')(tr_g' g) vs n^2")


def conformal_curvature_n1(u: ScalarField) -> tuple[np.ndarray, np.ndarray]:
    """Curvature component R_{1 1bar 1 1bar} of g' = e^u on a one-dimensional torus.

    Returns the component assembled two ways: via -dd_bar g' + g'^{-1}|d g'|^2
    and via the equivalent index ordering with the roles of the two
    holomorphic slots exchanged; for n = 1 all orderings must coincide.
    """
    gp = np.exp(u.values)
    g = u.grid
    dgp = apply_multiplier(g, gp, g.holo_multipliers[0])
    dbar_dgp = apply_multiplier(g, dgp, g.antiholo_multipliers[0])
    first = -dbar_dgp.real + (np.abs(dgp) ** 2) / gp
    dbar_gp = apply_multiplier(g, gp, g.antiholo_multipliers[0])
    d_dbar_gp = apply_multiplier(g, dbar_gp, g.holo_multipliers[0])
    second = -d_dbar_gp.real + (dgp * np.conj(dgp)).real / gp
    return first, second
