"""Monge-Ampere residuals and linearizations for the three metric families.

Residuals are kept in log form, so the linearization at phi is exactly
the variable-coefficient operator tr(g'^{-1} Hess psi) + c(t) psi with
c = -1 (negative first Chern class), 0 (Calabi-Yau), +t (Fano ramp).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .grid import PeriodicGrid, ScalarField, apply_multiplier, integrate
from .forms import (HermitianField, MetricField, _inverse_and_det,
                    complex_hessian, gradient_energy, hermitian_inner,
                    hermitian_min_max_eig, identity_metric, trace_wrt)
from .report import ReportEntry


class Family(enum.Enum):
    NEG_C1 = "neg-c1"
    CALABI_YAU = "cy"
    FANO = "fano"

    def zeroth_order_coeff(self, t: float) -> float:
        """Coefficient c in the linearization tr(g'^{-1} Hess psi) + c psi."""
        if self is Family.NEG_C1:
            return -1.0
        if self is Family.CALABI_YAU:
            return 0.0
        return +t


@dataclass(frozen=True)
class MAProblem:
    """One equation of the family at parameter t on a fixed grid."""

    grid: PeriodicGrid
    F: ScalarField
    family: Family
    t: float = 1.0
    background: MetricField | None = None

    @property
    def metric(self) -> MetricField:
        if self.background is not None:
            return self.background
        return identity_metric(self.grid)

    def data_field(self) -> ScalarField:
        """Right-hand-side data entering the log residual (phi-independent part).

        The Calabi-Yau ramp renormalizes t*F by the additive constant that
        restores the compatibility integral exp-data * volume = volume.
        """
        g = self.metric
        if self.family is Family.CALABI_YAU:
            tf = self.t * self.F.values
            vol = ScalarField(self.grid, g.det)
            total = integrate(ScalarField(self.grid, np.ones(self.grid.shape)), vol)
            c_t = -np.log(integrate(ScalarField(self.grid, np.exp(tf)), vol) / total)
            return ScalarField(self.grid, tf + c_t)
        if self.family is Family.NEG_C1:
            return ScalarField(self.grid, self.t * self.F.values)
        return self.F


def perturbed_metric(phi: ScalarField, problem: MAProblem,
                     margin: float = 0.0) -> MetricField:
    """g' = g + Hess phi, raising PositivityViolation outside the Kaehler cone."""
    h = complex_hessian(phi)
    g = problem.metric
    return MetricField.from_hermitian(
        HermitianField(phi.grid, g.entries + h.entries), margin=margin)


def cone_min_eig(phi: ScalarField, problem: MAProblem) -> float:
    """Smallest eigenvalue of g + Hess phi over the grid (no exception)."""
    h = complex_hessian(phi)
    lo, _ = hermitian_min_max_eig(problem.metric.entries + h.entries)
    return float(lo.min())


def forward_density(phi: ScalarField, problem: MAProblem) -> ScalarField:
    """log det(g + Hess phi) - log det(g)."""
    gp = perturbed_metric(phi, problem)
    return ScalarField(phi.grid, np.log(gp.det) - np.log(problem.metric.det))


def residual(phi: ScalarField, problem: MAProblem) -> ScalarField:
    """Log-form equation residual; zero pointwise iff phi solves the family at t."""
    fd = forward_density(phi, problem)
    data = problem.data_field()
    if problem.family is Family.NEG_C1:
        return ScalarField(phi.grid, fd.values - data.values - phi.values)
    if problem.family is Family.CALABI_YAU:
        return ScalarField(phi.grid, fd.values - data.values)
    return ScalarField(phi.grid, fd.values - data.values + problem.t * phi.values)


def linearized_apply(psi: ScalarField, phi: ScalarField,
                     problem: MAProblem) -> ScalarField:
    """Derivative of the residual in the phi direction: tr(g'^{-1} Hess psi) + c psi."""
    gp = perturbed_metric(phi, problem)
    h = complex_hessian(psi)
    c = problem.family.zeroth_order_coeff(problem.t)
    val = trace_wrt(h, gp).values + c * psi.values
    return ScalarField(psi.grid, val)


def directional_derivative_check(phi: ScalarField, psi: ScalarField,
                                 problem: MAProblem, h: float) -> ReportEntry:
    """Centered-difference validation of linearized_apply; discrepancy is O(h^2)."""
    plus = residual(phi + h * psi, problem)
    minus = residual(phi - h * psi, problem)
    fd = (plus.values - minus.values) / (2.0 * h)
    lin = linearized_apply(psi, phi, problem)
    disc = float(np.abs(fd - lin.values).max())
    return ReportEntry(name="linearization_fd", lhs=disc, rhs=0.0,
                       tolerance=np.inf, kind="report",
                       context=f"sup |centered diff - linearization| at h={h:g}")


def c3_tensor_norm(phi: ScalarField, problem: MAProblem) -> ScalarField:
    """Pointwise norm |S| of S^i_jk = g'^{i lbar} d_j d_k d_lbar phi (flat background).

    |S|^2 = g'^{j kbar} g'^{a bbar} g'_{p qbar} S^p_ja conj(S^q_kb).
    """
    g = phi.grid
    n = g.n_complex
    gp = perturbed_metric(phi, problem)
    D3 = np.empty(g.shape + (n, n, n), dtype=complex)
    for j in range(n):
        for k in range(j, n):
            for l in range(n):
                mult = (g.holo_multipliers[j] * g.holo_multipliers[k]
                        * g.antiholo_multipliers[l])
                d = apply_multiplier(g, phi.values, mult)
                D3[..., j, k, l] = d
                if k != j:
                    D3[..., k, j, l] = d
    # inverse index convention: gp.inverse[..., l, i] = g'^{i lbar}
    S = np.einsum("...li,...jkl->...ijk", gp.inverse, D3)
    norm2 = np.einsum("...kj,...ba,...pq,...pja,...qkb->...",
                      gp.inverse, gp.inverse, gp.entries, S, np.conj(S)).real
    return ScalarField(g, np.sqrt(np.maximum(norm2, 0.0)))


def energy_identity_terms(phi: ScalarField, g: MetricField,
                          hess_sign: float = -1.0) -> dict:
    """Both sides of the potential-energy identity for omega_phi = omega + s*i dd_bar phi.

    lhs   = integral phi (omega_phi^n - omega^n)
    rhs   = -s * integral i d phi ^ dbar phi ^ (omega_phi^{n-1} + ... + omega^{n-1})
    bound = (1/n) integral |d phi|^2 omega^n   (valid lower bound for -s*lhs... see
            caller; with s = -1 the identity reads lhs = +T and T >= bound).

    All top forms are reduced to scalars against the background volume.
    """
    grid = phi.grid
    n = grid.n_complex
    s = float(hess_sign)
    hess = complex_hessian(phi)
    gp_entries = g.entries + s * hess.entries
    lo, _ = hermitian_min_max_eig(gp_entries)
    pd_ok = bool(lo.min() > 0)
    _, detp = _inverse_and_det(gp_entries)

    vol = ScalarField(grid, g.det)
    lhs = integrate(ScalarField(grid, phi.values * (detp / g.det - 1.0)), vol)

    # P_{j kbar} = d_j phi d_kbar phi
    dz = [apply_multiplier(grid, phi.values, grid.holo_multipliers[j])
          for j in range(n)]
    P = np.empty(grid.shape + (n, n), dtype=complex)
    for j in range(n):
        for k in range(n):
            P[..., j, k] = dz[j] * np.conj(dz[k])
    Pfield = HermitianField(grid, P)

    if n == 1:
        T = integrate(trace_wrt(Pfield, g), vol)
    else:
        T = 0.0
        for gamma in (HermitianField(grid, gp_entries), g.as_hermitian()):
            term = (trace_wrt(Pfield, g).values * trace_wrt(gamma, g).values
                    - hermitian_inner(Pfield, gamma, g).values) / 2.0
            T += integrate(ScalarField(grid, term), vol)
    bound = integrate(gradient_energy(phi, g), vol) / n
    return {"lhs": lhs, "transport": T, "lower_bound": bound,
            "identity_error": abs(lhs - (-s) * T), "pd_ok": pd_ok}
