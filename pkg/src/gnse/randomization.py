"""Unit-cube partition of unity and Wiener randomization of rough data.

The datum is decomposed over unit frequency cubes k via a smooth radial bump
(plateau |xi| < 3/4, support |xi| < 1, exp(-1/x) glue) normalized so the
shifted copies sum to one, and each block is multiplied by an independent
mean-zero random variable.  Reality of the output requires pairing the draws
as g_{-k} = g_k: one variable is drawn per unordered cube pair {k, -k}.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spectral import SpectralVectorField, leray_project

PLATEAU_RADIUS = 0.75
SUPPORT_RADIUS = 1.0


def _smooth_step(x):
    """C-infinity step: 0 for x <= 0, 1 for x >= 1, built from exp(-1/x)."""
    x = np.asarray(x, dtype=np.float64)
    with np.errstate(over="ignore", divide="ignore"):
        a = np.where(x > 0.0, np.exp(-1.0 / np.maximum(x, 1e-300)), 0.0)
        b = np.where(x < 1.0, np.exp(-1.0 / np.maximum(1.0 - x, 1e-300)), 0.0)
    return a / (a + b)


def bump(r):
    """Radial bump: 1 on [0, 3/4), 0 on [1, inf), smooth glue between."""
    r = np.asarray(r, dtype=np.float64)
    t = (r - PLATEAU_RADIUS) / (SUPPORT_RADIUS - PLATEAU_RADIUS)
    return 1.0 - _smooth_step(t)


@dataclass(frozen=True)
class BumpProfile:
    plateau_radius: float = PLATEAU_RADIUS
    support_radius: float = SUPPORT_RADIUS

    def __call__(self, r):
        return bump(r)


class PartitionOfUnity:
    """Evaluator of phi_k(xi) = bump(xi - k) / sum_k' bump(xi - k')."""

    def __init__(self, grid):
        self.grid = grid
        reach = int(math.floor(grid.xi_max + SUPPORT_RADIUS)) + 1
        axes = [np.arange(-reach, reach + 1)] * grid.d
        ks = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, grid.d)
        xi = grid.xi
        denom = np.zeros(grid.shape)
        active = []
        for k in ks:
            off = xi - k.reshape((grid.d,) + (1,) * grid.d)
            w = bump(np.sqrt(np.sum(off**2, axis=0)))
            if np.any(w > 0.0):
                active.append(tuple(int(c) for c in k))
                denom += w
        if np.any(denom <= 0.0):
            raise ValueError("partition denominator vanished on the lattice")
        self.cubes = tuple(active)
        self._denom = denom

    def weight(self, k):
        """phi(xi - k) on the grid lattice, normalized."""
        off = self.grid.xi - np.asarray(k, dtype=np.float64).reshape((self.grid.d,) + (1,) * self.grid.d)
        return bump(np.sqrt(np.sum(off**2, axis=0))) / self._denom

    def weights_at(self, points):
        """List of (cube, weight array) pairs at arbitrary frequency points."""
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        base = np.floor(points).astype(np.int64)
        out = []
        denom = np.zeros(len(points))
        rows = []
        for shift in np.ndindex(*([3] * points.shape[1])):
            k = base + (np.asarray(shift) - 1)
            w = bump(np.linalg.norm(points - k, axis=1))
            rows.append((k, w))
            denom += w
        for k, w in rows:
            if np.any(w > 0.0):
                out.append((k, w / denom))
        return out

    def partition_sum(self, points):
        """sum_k phi_k at the given points; equals 1 by construction."""
        total = np.zeros(len(np.atleast_2d(points)))
        for _, w in self.weights_at(points):
            total += w
        return total


def build_partition(grid):
    return PartitionOfUnity(grid)


@dataclass(frozen=True)
class RandomSpec:
    """Random-coefficient family: distribution, master seed, pair symmetrization."""

    distribution: str = "gaussian"
    master_seed: int = 0

    def __post_init__(self):
        if self.distribution not in ("gaussian", "rademacher"):
            raise ValueError(f"unsupported distribution {self.distribution!r}")

    def _rng(self, member):
        seq = np.random.SeedSequence(entropy=self.master_seed, spawn_key=(member,))
        return np.random.Generator(np.random.Philox(seq))

    def draw(self, count, member):
        rng = self._rng(member)
        if self.distribution == "gaussian":
            return rng.standard_normal(count)
        return 2.0 * rng.integers(0, 2, size=count) - 1.0

    def cube_values(self, cubes, member):
        """g_k for each cube, with g_{-k} = g_k via canonical pair draws."""
        reps = sorted({_canonical(k) for k in cubes})
        draws = dict(zip(reps, self.draw(len(reps), member)))
        return np.array([draws[_canonical(k)] for k in cubes])


def _canonical(k):
    nk = tuple(-c for c in k)
    return k if k >= nk else nk


def randomize(datum, partition, spec, member):
    """Multiply each unit-cube block of the datum by its random coefficient.

    Output is deterministic in (master_seed, member), real, divergence-free
    and mean-free whenever the datum is; degenerate g == 1 is the identity.
    """
    g = datum.grid
    values = spec.cube_values(partition.cubes, member)
    mult = np.zeros(g.shape)
    for k, gk in zip(partition.cubes, values):
        mult += gk * partition.weight(k)
    out = SpectralVectorField(g, datum.coeffs * mult[None])
    return out.zero_mean()


def _splitmix64(x):
    """Vectorized splitmix64; the documented phase hash for synthetic data."""
    x = x.astype(np.uint64)
    x = (x + np.uint64(0x9E3779B97F4A7C15)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    z = x
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def synthesize_datum(regime, grid, amplitude=1.0):
    """Divergence-free datum with |coeff| = amplitude * |xi|^(-s - d/2).

    The dyadic-shell mass measured in the homogeneous s-norm is then flat in
    the shell index: the datum sits at the borderline of that regularity and
    in nothing better, emulating rough data.  Directions are exactly
    divergence-free, phases come from the splitmix64 hash of the lattice
    index, and Hermitian symmetry is imposed on canonical half-lattice pairs.
    """
    d, s = grid.d, regime.s
    idx = [grid.index_1d] * d
    mesh = np.meshgrid(*idx, indexing="ij")
    packed = np.zeros(grid.shape, dtype=np.uint64)
    for comp in mesh:
        packed = packed * np.uint64(grid.n) + (comp % grid.n).astype(np.uint64)
    phase = 2.0 * math.pi * (_splitmix64(packed) / 2.0**64)

    mag = np.zeros(grid.shape)
    nz = grid.xi_abs > 0
    mag[nz] = amplitude * grid.xi_abs[nz] ** (-s - d / 2.0)

    xi = grid.xi
    if d == 2:
        e = np.stack([-xi[1], xi[0]], axis=0)
    else:
        # cross with the least-aligned coordinate axis, nonzero off the axes
        a = np.zeros((3,) + grid.shape)
        pick = np.argmin(np.abs(xi), axis=0)
        for i in range(3):
            a[i][pick == i] = 1.0
        e = np.cross(xi, a, axisa=0, axisb=0, axisc=0)
    norm = np.sqrt(np.sum(e**2, axis=0))
    norm[norm == 0.0] = 1.0
    e = e / norm[None]

    coeffs = (mag * np.exp(1j * phase))[None] * e

    # Hermitian symmetry: keep canonical half, mirror the conjugate
    signed = np.stack(mesh, axis=0)
    canonical = np.zeros(grid.shape, dtype=bool)
    decided = np.zeros(grid.shape, dtype=bool)
    for comp in signed:
        canonical |= (~decided) & (comp > 0)
        decided |= comp != 0
    from .spectral import reflect

    mirrored = np.conj(reflect(coeffs, d))
    coeffs = np.where(canonical[None], coeffs, mirrored)
    coeffs[:, ~decided] = 0.0  # zero mode
    coeffs[:, grid.nyquist_mask] = 0.0

    field = SpectralVectorField(grid, coeffs)
    return leray_project(field)


def scale_to_hs_norm(field, s, target):
    """Rescale a field so its homogeneous s-norm equals target."""
    from .params import NormSpec
    from .norms import spatial_norm

    cur = spatial_norm(field, NormSpec.hom_sobolev(math.inf, 0.0, s))
    if cur == 0.0:
        raise ValueError("cannot scale a zero field")
    return field * (target / cur)


def moment_check(spec, n, samples=100_000):
    """Monte Carlo E|g|^(2n) with its standard error: (estimate, stderr)."""
    if n < 1 or int(n) != n:
        raise ValueError("moment order n must be a positive integer")
    draws = spec.draw(samples, member=2**31)
    vals = np.abs(draws) ** (2 * int(n))
    est = float(np.mean(vals))
    err = float(np.std(vals, ddof=1) / math.sqrt(samples))
    return est, err


def gaussian_even_moment(n):
    """(2n-1)!! — the exact standard-normal moment E|g|^(2n)."""
    out = 1.0
    for k in range(1, 2 * n, 2):
        out *= k
    return out
