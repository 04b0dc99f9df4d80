"""Spatial and time-weighted mixed norms on spectral fields and trajectories.

L^p norms use cell-sum quadrature on the uniform physical grid (spectrally
accurate for band-limited fields); Sobolev variants apply the corresponding
Fourier multiplier first.  Temporal norms are composite trapezoid in t of
(t^rho * spatial)^a, with the discrete max for a = infinity.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import fft as sfft

from .params import NormSpec
from .spectral import SpectralVectorField


def _physical_magnitude(coeffs, grid):
    npts = grid.n**grid.d
    phys = np.real(sfft.ifftn(coeffs, axes=grid.axes) * npts)
    return np.sqrt(np.sum(phys**2, axis=0))


def _lp_from_coeffs(coeffs, grid, r):
    mag = _physical_magnitude(coeffs, grid)
    if math.isinf(r):
        return float(np.max(mag))
    return float((np.sum(mag**r) * grid.cell_volume) ** (1.0 / r))


def spatial_norm(field, spec):
    """Spatial part of a NormSpec evaluated on one field."""
    g = field.grid
    kind = spec.kind
    if kind == "lp":
        return _lp_from_coeffs(field.coeffs, g, spec.r)
    if kind == "hom_sobolev":
        zero = (0,) + (0,) * g.d
        if spec.order < 0 and abs(field.coeffs[zero]) > 1e-14 * max(field.max_abs(), 1e-300):
            raise ValueError("negative-order homogeneous norm on a field with nonzero mean")
        w = np.zeros(g.shape)
        nz = g.xi_abs > 0
        w[nz] = g.xi_abs[nz] ** (2.0 * spec.order)
        tot = float(np.sum(w[None] * np.abs(field.coeffs) ** 2))
        return math.sqrt(g.box_length**g.d * tot)
    if kind == "inhom_sobolev":
        mult = (1.0 + g.xi_sq) ** (spec.order / 2.0)
        return _lp_from_coeffs(field.coeffs * mult[None], g, spec.r)
    if kind == "hom_sobolev_lp":
        zero = (0,) + (0,) * g.d
        if spec.order < 0 and abs(field.coeffs[zero]) > 1e-14 * max(field.max_abs(), 1e-300):
            raise ValueError("negative-order homogeneous norm on a field with nonzero mean")
        mult = np.zeros(g.shape)
        nz = g.xi_abs > 0
        mult[nz] = g.xi_abs[nz] ** spec.order
        return _lp_from_coeffs(field.coeffs * mult[None], g, spec.r)
    raise ValueError(f"unknown norm kind {kind!r}")


def plancherel_l2(field):
    return field.l2()


def _temporal_reduce(times, values, a_time, rho):
    t = np.asarray(times, dtype=np.float64)
    v = np.asarray(values, dtype=np.float64)
    weighted = np.where(t > 0, t, 1.0) ** rho * v
    if t[0] == 0.0:
        weighted[0] = v[0] if rho == 0.0 else (0.0 if rho > 0.0 else np.inf)
    if math.isinf(a_time):
        return float(np.max(weighted))
    powed = np.where(np.isfinite(weighted), weighted, 0.0) ** a_time
    if t[0] == 0.0 and rho < 0.0:
        # integrable singularity: first cell analytic with frozen spatial norm
        if rho * a_time <= -1.0:
            raise ValueError("weight not integrable at t=0")
        head = v[1] ** a_time * t[1] ** (rho * a_time + 1.0) / (rho * a_time + 1.0)
        tail = np.trapezoid(powed[1:], t[1:]) if len(t) > 2 else 0.0
        return float((head + tail) ** (1.0 / a_time))
    return float(np.trapezoid(powed, t) ** (1.0 / a_time))


def trajectory_norm(traj, spec, _cache=None):
    """|| t^rho f(t) ||_{L^{a}(0,T; X)} by trapezoid over the node times."""
    if len(traj) < 2:
        raise ValueError("trajectory_norm needs at least 2 nodes")
    key = (spec.kind, spec.order, spec.r)
    if _cache is not None and key in _cache:
        values = _cache[key]
    else:
        values = np.array([spatial_norm(f, spec) for f in traj.fields])
        if _cache is not None:
            _cache[key] = values
    return _temporal_reduce(traj.times, values, spec.a_time, spec.rho)


def composite_norm(traj, components):
    """Sum of trajectory norms over a component list (shared spatial cache)."""
    cache = {}
    return float(sum(trajectory_norm(traj, c, _cache=cache) for c in components))


def yspace_norm(traj, case):
    """Norm of the selected Y-case: the sum of its constituent norms."""
    return composite_norm(traj, case.norm_components)


def xspace_norm(traj, regime, which, exps=None):
    from .params import xspace_components

    return composite_norm(traj, xspace_components(regime, which, exps))


def linf_l2_norm(traj):
    return max(f.l2() for f in traj.fields)
