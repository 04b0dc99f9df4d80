"""Dealiased pseudo-spectral bilinear term B(f, g) = P (f . grad) g.

The 2/3 truncation is applied to both inputs and to the output, which makes
the quadratic product alias-free: with divergence-free f the discrete
pairing <B(f, g), g> then vanishes to round-off, and that skew-symmetry is
what the energy identities downstream rest on.
"""
from __future__ import annotations

import numpy as np
from scipy import fft as sfft

from .spectral import GridError, SpectralVectorField, leray_project


def advective_term(f, g):
    """(f . grad) g, dealiased, no projection. Building block of B."""
    if f.grid is not g.grid and f.grid != g.grid:
        raise GridError("fields must share a grid")
    grid = f.grid
    mask = grid.dealias_mask[None]
    npts = grid.n**grid.d
    fc = f.coeffs * mask
    gc = g.coeffs * mask
    f_phys = np.real(sfft.ifftn(fc, axes=grid.axes) * npts)
    out_phys = np.zeros_like(f_phys)
    for j in range(grid.d):
        dg = np.real(sfft.ifftn(1j * grid.xi[j][None] * gc, axes=grid.axes) * npts)
        out_phys += f_phys[j][None] * dg
    out = sfft.fftn(out_phys, axes=grid.axes) / npts
    out *= mask
    return SpectralVectorField(grid, out)


def bilinear_B(f, g, project_f=True):
    """Leray-projected advection of g by f; output mean-free, div-free."""
    if project_f:
        f = leray_project(f)
    adv = advective_term(f, g)
    return leray_project(adv).zero_mean()


def inner_l2(a, b):
    """Plancherel pairing <a, b> = int a . b dx of two real fields."""
    g = a.grid
    return float(np.real(np.sum(a.coeffs * np.conj(b.coeffs))) * g.box_length**g.d)


def energy_flux(u):
    """<B(u, u), u>; vanishes to round-off for dealiased div-free u."""
    if u.divergence_residual() > 1e-8:
        raise ValueError("energy_flux requires a divergence-free field")
    return inner_l2(bilinear_B(u, u, project_f=False), u)
