"""Periodic-box spectral representation: grids, vector fields, multipliers.

Transform convention: a field f(x) = sum_k coeff(xi_k) exp(i xi_k . x) on the
box [0, 2*pi*m)^d, so coeff(xi_k) = (1/L^d) int f exp(-i xi_k . x) dx and
Plancherel reads ||f||_{L^2}^2 = L^d sum_k |coeff(xi_k)|^2.  The frequency
lattice is xi = j/m for integer j in [-n/2, n/2)^d (FFT storage order).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
from scipy import fft as sfft


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid: d in {2, 3}, n modes per axis, box 2*pi*m."""

    d: int
    n: int
    m: int = 1

    def __post_init__(self):
        if self.d not in (2, 3):
            raise GridError(f"only d in (2, 3) supported, got {self.d}")
        if self.n < 8 or self.n & (self.n - 1):
            raise GridError(f"n must be a power of two >= 8, got {self.n}")
        if self.m < 1 or int(self.m) != self.m:
            raise GridError(f"box multiplier m must be a positive integer, got {self.m}")

    @property
    def box_length(self):
        return 2.0 * math.pi * self.m

    @property
    def dxi(self):
        return 1.0 / self.m

    @property
    def dx(self):
        return self.box_length / self.n

    @property
    def shape(self):
        return (self.n,) * self.d

    @property
    def axes(self):
        return tuple(range(1, self.d + 1))

    @property
    def cell_volume(self):
        return self.dx**self.d

    @property
    def xi_max(self):
        return self.n / (2.0 * self.m)

    @cached_property
    def index_1d(self):
        # integer mode indices in FFT order: 0..n/2-1, -n/2..-1
        return np.rint(np.fft.fftfreq(self.n, d=1.0 / self.n)).astype(np.int64)

    @cached_property
    def xi(self):
        """Frequency components, shape (d, n, ..., n)."""
        ax = [self.index_1d / self.m] * self.d
        return np.stack(np.meshgrid(*ax, indexing="ij"), axis=0)

    @cached_property
    def xi_sq(self):
        return np.sum(self.xi**2, axis=0)

    @cached_property
    def xi_abs(self):
        return np.sqrt(self.xi_sq)

    @cached_property
    def dealias_mask(self):
        """Two-thirds rule: keep |j_i| <= n//3 on every axis."""
        keep1d = np.abs(self.index_1d) <= self.n // 3
        mask = np.ones(self.shape, dtype=bool)
        for ax in range(self.d):
            shape = [1] * self.d
            shape[ax] = self.n
            mask &= keep1d.reshape(shape)
        return mask

    @cached_property
    def nyquist_mask(self):
        """True on modes with any index equal to -n/2."""
        ny1d = self.index_1d == -(self.n // 2)
        mask = np.zeros(self.shape, dtype=bool)
        for ax in range(self.d):
            shape = [1] * self.d
            shape[ax] = self.n
            mask |= ny1d.reshape(shape)
        return mask

    def physical_coords(self):
        x1 = np.arange(self.n) * self.dx
        return np.stack(np.meshgrid(*([x1] * self.d), indexing="ij"), axis=0)


@lru_cache(maxsize=64)
def dissipation_symbol(grid, two_alpha):
    """|xi|^(2*alpha) on the lattice, zero at the zero mode."""
    sym = np.zeros(grid.shape)
    nz = grid.xi_abs > 0
    sym[nz] = grid.xi_abs[nz] ** two_alpha
    return sym


def reflect(coeffs, d):
    """Map coeff(xi) -> coeff(-xi) on the last d axes (FFT storage order)."""
    out = coeffs
    for ax in range(-d, 0):
        out = np.roll(np.flip(out, axis=ax), 1, axis=ax)
    return out


class SpectralVectorField:
    """d-component complex coefficient array on a Grid.

    Maintained invariants: Hermitian symmetry (real in physical space),
    zero mean, and after leray_project a divergence residual at round-off.
    """

    __slots__ = ("grid", "coeffs")

    def __init__(self, grid, coeffs):
        coeffs = np.asarray(coeffs, dtype=np.complex128)
        if coeffs.shape != (grid.d,) + grid.shape:
            raise GridError(f"coefficient shape {coeffs.shape} does not match grid {grid}")
        self.grid = grid
        self.coeffs = coeffs

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros((grid.d,) + grid.shape, dtype=np.complex128))

    def copy(self):
        return SpectralVectorField(self.grid, self.coeffs.copy())

    def __add__(self, other):
        return SpectralVectorField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other):
        return SpectralVectorField(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        return SpectralVectorField(self.grid, self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return SpectralVectorField(self.grid, -self.coeffs)

    def zero_mean(self):
        self.coeffs[(slice(None),) + (0,) * self.grid.d] = 0.0
        return self

    def zero_nyquist(self):
        # even-grid Nyquist planes are sign-ambiguous under xi -> -xi
        self.coeffs[:, self.grid.nyquist_mask] = 0.0
        return self

    def hermitianize(self):
        self.coeffs = 0.5 * (self.coeffs + np.conj(reflect(self.coeffs, self.grid.d)))
        return self

    def hermitian_defect(self):
        return float(np.max(np.abs(self.coeffs - np.conj(reflect(self.coeffs, self.grid.d)))))

    def l2(self):
        """Plancherel L^2 norm: (L^d sum |coeff|^2)^(1/2)."""
        return math.sqrt(self.grid.box_length**self.grid.d * float(np.sum(np.abs(self.coeffs) ** 2)))

    def divergence_residual(self):
        """max_xi |xi . coeff| / max(|coeff|) over nonzero modes."""
        g = self.grid
        div = np.einsum("i...,i...->...", g.xi, self.coeffs)
        scale = float(np.max(np.abs(self.coeffs)))
        if scale == 0.0:
            return 0.0
        return float(np.max(np.abs(div))) / (scale * max(1.0, float(np.max(g.xi_abs))))

    def max_abs(self):
        return float(np.max(np.abs(self.coeffs)))


def to_physical(field):
    """Inverse transform to real point values, shape (d, n, ..., n)."""
    g = field.grid
    npts = g.n**g.d
    return np.real(sfft.ifftn(field.coeffs, axes=g.axes) * npts)


def to_spectral(samples, grid):
    """Forward transform of real point values into a SpectralVectorField."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.shape != (grid.d,) + grid.shape:
        raise GridError(f"sample shape {samples.shape} does not match grid {grid}")
    npts = grid.n**grid.d
    return SpectralVectorField(grid, sfft.fftn(samples, axes=grid.axes) / npts)


def leray_project(field):
    """Remove the gradient part: coeff -= xi (xi . coeff) / |xi|^2."""
    g = field.grid
    dot = np.einsum("i...,i...->...", g.xi, field.coeffs)
    denom = np.where(g.xi_sq > 0, g.xi_sq, 1.0)
    out = field.coeffs - g.xi * (dot / denom)[None]
    proj = SpectralVectorField(g, out)
    proj.zero_mean()
    return proj


def apply_fractional_power(field, order):
    """|xi|^order multiplier; the zero mode maps to zero for every order."""
    g = field.grid
    if order == 0.0:
        return field.copy().zero_mean()
    mult = np.zeros(g.shape)
    nz = g.xi_abs > 0
    mult[nz] = g.xi_abs[nz] ** order
    return SpectralVectorField(g, field.coeffs * mult[None])


def apply_dealias(field):
    out = field.coeffs * field.grid.dealias_mask[None]
    return SpectralVectorField(field.grid, out)


class Trajectory:
    """Time-indexed sequence of spectral fields on a shared grid."""

    def __init__(self, times, fields, metadata=None):
        times = np.asarray(times, dtype=np.float64)
        if times.ndim != 1 or len(times) != len(fields):
            raise ValueError("times and fields must have equal length")
        if len(times) and times[0] < 0.0:
            raise ValueError("node times must be nonnegative")
        if np.any(np.diff(times) <= 0.0):
            raise ValueError("node times must be strictly increasing")
        grids = {f.grid for f in fields}
        if len(grids) > 1:
            raise GridError("all trajectory fields must share one grid")
        self.times = times
        self.fields = list(fields)
        self.metadata = dict(metadata or {})

    @property
    def grid(self):
        return self.fields[0].grid

    def __len__(self):
        return len(self.fields)

    def __iter__(self):
        return zip(self.times, self.fields)

    def restrict(self, t_lo, t_hi):
        keep = (self.times >= t_lo - 1e-15) & (self.times <= t_hi + 1e-15)
        idx = np.nonzero(keep)[0]
        return Trajectory(self.times[idx], [self.fields[i] for i in idx], self.metadata)
