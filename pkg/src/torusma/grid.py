"""Spectral calculus on flat complex tori sampled as periodic lattices.

The torus C^n/(L Z^n + i L Z^n) with n = 1 or 2 is discretized on a uniform
real 2n-dimensional grid.  Real axes are ordered (x_1, y_1[, x_2, y_2]) with
z_j = x_j + i y_j.  Every derivative is a Fourier multiplier, so band-limited
fields are differentiated exactly up to rounding.  The Nyquist mode of each
first derivative is zeroed, which keeps odd derivatives of real fields real.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import fft as _sfft


def _fftn(a: np.ndarray, ndim: int) -> np.ndarray:
    return _sfft.fftn(a, axes=tuple(range(a.ndim - ndim, a.ndim)), workers=-1)


def _ifftn(a: np.ndarray, ndim: int) -> np.ndarray:
    return _sfft.ifftn(a, axes=tuple(range(a.ndim - ndim, a.ndim)), workers=-1)


@dataclass(frozen=True)
class PeriodicGrid:
    """Uniform periodic lattice on the real 2n-torus underlying C^n/Lambda."""

    n_complex: int
    resolution: int
    period: float = 1.0

    def __post_init__(self):
        if self.n_complex not in (1, 2):
            raise ValueError("n_complex must be 1 or 2")
        if self.resolution < 8 or self.resolution % 2 != 0:
            raise ValueError("resolution must be even, >= 8")
        if not self.period > 0:
            raise ValueError("period must be positive")

    @property
    def real_dim(self) -> int:
        return 2 * self.n_complex

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.resolution,) * self.real_dim

    @property
    def point_count(self) -> int:
        return self.resolution ** self.real_dim

    @property
    def total_volume(self) -> float:
        return self.period ** self.real_dim

    @property
    def cell_volume(self) -> float:
        return (self.period / self.resolution) ** self.real_dim

    def axis_coordinates(self, axis: int) -> np.ndarray:
        """Coordinates along one real axis, broadcastable over the grid."""
        x = np.arange(self.resolution) * (self.period / self.resolution)
        shape = [1] * self.real_dim
        shape[axis] = self.resolution
        return x.reshape(shape)

    @cached_property
    def _deriv_multipliers(self) -> tuple[np.ndarray, ...]:
        # i*k per real axis, Nyquist zeroed.
        N, L = self.resolution, self.period
        k = 2.0 * np.pi * _sfft.fftfreq(N, d=L / N)
        k[N // 2] = 0.0
        out = []
        for a in range(self.real_dim):
            shape = [1] * self.real_dim
            shape[a] = N
            out.append((1j * k).reshape(shape))
        return tuple(out)

    @cached_property
    def holo_multipliers(self) -> tuple[np.ndarray, ...]:
        """Multiplier of d/dz_j = (d/dx_j - i d/dy_j)/2 for each j."""
        dm = self._deriv_multipliers
        return tuple(0.5 * (dm[2 * j] - 1j * dm[2 * j + 1])
                     for j in range(self.n_complex))

    @cached_property
    def antiholo_multipliers(self) -> tuple[np.ndarray, ...]:
        """Multiplier of d/dzbar_j = (d/dx_j + i d/dy_j)/2."""
        dm = self._deriv_multipliers
        return tuple(0.5 * (dm[2 * j] + 1j * dm[2 * j + 1])
                     for j in range(self.n_complex))

    @cached_property
    def flat_laplace_symbol(self) -> np.ndarray:
        """Symbol of the flat Kaehler Laplacian (one quarter of the real one)."""
        sym = np.zeros(self.shape)
        for m in self.holo_multipliers:
            sym = sym - np.abs(m) ** 2
        return sym

    def refine(self, factor: int = 2) -> "PeriodicGrid":
        return PeriodicGrid(self.n_complex, self.resolution * factor, self.period)


@dataclass(frozen=True)
class ScalarField:
    """Real-valued function sampled on a PeriodicGrid."""

    grid: PeriodicGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise ValueError(f"values shape {v.shape} != grid shape {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field contains NaN/Inf")
        object.__setattr__(self, "values", v)

    def _coerce(self, other):
        if isinstance(other, ScalarField):
            return other.values
        return other

    def __add__(self, other):
        return ScalarField(self.grid, self.values + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return ScalarField(self.grid, self.values - self._coerce(other))

    def __rsub__(self, other):
        return ScalarField(self.grid, self._coerce(other) - self.values)

    def __mul__(self, other):
        return ScalarField(self.grid, self.values * self._coerce(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return ScalarField(self.grid, self.values / self._coerce(other))

    def __neg__(self):
        return ScalarField(self.grid, -self.values)


def zeros(grid: PeriodicGrid) -> ScalarField:
    return ScalarField(grid, np.zeros(grid.shape))


def constant(grid: PeriodicGrid, value: float) -> ScalarField:
    return ScalarField(grid, np.full(grid.shape, float(value)))


@dataclass(frozen=True)
class SpectralField:
    """Fourier coefficients of a field, indexed by integer frequency vectors."""

    grid: PeriodicGrid
    coefficients: np.ndarray


def to_spectral(f: ScalarField) -> SpectralField:
    return SpectralField(f.grid, _fftn(f.values.astype(complex), f.grid.real_dim))


def from_spectral(sf: SpectralField) -> ScalarField:
    return ScalarField(sf.grid, _ifftn(sf.coefficients, sf.grid.real_dim).real)


def apply_multiplier(grid: PeriodicGrid, values: np.ndarray, mult) -> np.ndarray:
    """ifft(mult * fft(values)) over the trailing grid axes (batch dims allowed)."""
    return _ifftn(mult * _fftn(np.asarray(values, dtype=complex), grid.real_dim),
                  grid.real_dim)


def partial_z(f: ScalarField, j: int) -> np.ndarray:
    """d f / d z_j as a complex-valued array."""
    return apply_multiplier(f.grid, f.values, f.grid.holo_multipliers[j])


def partial_zbar(f: ScalarField, j: int) -> np.ndarray:
    """d f / d zbar_j as a complex-valued array."""
    return apply_multiplier(f.grid, f.values, f.grid.antiholo_multipliers[j])


def integrate(f: ScalarField, vol: ScalarField | None = None) -> float:
    """Integral of f against a density relative to the flat background volume.

    Quadrature is the grid mean times total volume, which is exponentially
    accurate for smooth periodic integrands.
    """
    v = f.values if vol is None else f.values * vol.values
    return float(v.mean() * f.grid.total_volume)


def mean(f: ScalarField) -> float:
    return float(f.values.mean())


def sup(f: ScalarField) -> float:
    return float(f.values.max())


def inf(f: ScalarField) -> float:
    return float(f.values.min())


def lp_norm(f: ScalarField, p: float, vol: ScalarField | None = None) -> float:
    """L^p norm; p = inf gives sup|f|.  Monotone in p when total volume is 1."""
    if p == np.inf:
        return float(np.abs(f.values).max())
    if p < 1:
        raise ValueError("p must be >= 1")
    a = np.abs(f.values) ** p
    if vol is not None:
        a = a * vol.values
    return float((a.mean() * f.grid.total_volume) ** (1.0 / p))


@dataclass(frozen=True)
class FourierTerm:
    """One term a*cos(2 pi m.x / L + phase) (kind 'sin' shifts the phase)."""

    kind: str  # "cos" | "sin"
    modes: tuple[int, ...]
    amplitude: float
    phase: float = 0.0

    def __post_init__(self):
        if self.kind not in ("cos", "sin"):
            raise ValueError("kind must be 'cos' or 'sin'")


def fourier_field(grid: PeriodicGrid, terms) -> ScalarField:
    """Band-limited field from an explicit list of Fourier terms."""
    v = np.zeros(grid.shape)
    for t in terms:
        if len(t.modes) != grid.real_dim:
            raise ValueError(f"term mode vector {t.modes} needs {grid.real_dim} entries")
        arg = np.zeros(grid.shape)
        for a, m in enumerate(t.modes):
            if m:
                arg = arg + (2.0 * np.pi * m / grid.period) * grid.axis_coordinates(a)
        arg = arg + t.phase
        v += t.amplitude * (np.cos(arg) if t.kind == "cos" else np.sin(arg))
    return ScalarField(grid, v)


def random_fourier_terms(real_dim: int, max_mode: int, amplitude: float,
                         rng: np.random.Generator, n_terms: int = 6) -> list[FourierTerm]:
    """Seeded band-limited random data, reproducible at any resolution."""
    terms = []
    for _ in range(n_terms):
        modes = tuple(int(m) for m in rng.integers(-max_mode, max_mode + 1, real_dim))
        if all(m == 0 for m in modes):
            modes = (1,) + (0,) * (real_dim - 1)
        amp = amplitude * float(rng.uniform(0.3, 1.0)) / n_terms
        phase = float(rng.uniform(0.0, 2.0 * np.pi))
        terms.append(FourierTerm("cos", modes, amp, phase))
    return terms


def resample(f: ScalarField, grid: PeriodicGrid) -> ScalarField:
    """Evaluate the trigonometric interpolant of f on a finer or coarser grid."""
    if grid.n_complex != f.grid.n_complex or grid.period != f.grid.period:
        raise ValueError("grids are not compatible")
    src, dst = f.grid.resolution, grid.resolution
    if src == dst:
        return ScalarField(grid, f.values.copy())
    coef = _fftn(f.values.astype(complex), f.grid.real_dim) / f.grid.point_count
    out = np.zeros(grid.shape, dtype=complex)
    half = min(src, dst) // 2
    idx = np.r_[0:half, -half:0]
    take = np.ix_(*[idx] * f.grid.real_dim)
    out[take] = coef[take]
    # drop the ambiguous Nyquist plane when coarsening
    return ScalarField(grid, (_ifftn(out, grid.real_dim) * grid.point_count).real)
