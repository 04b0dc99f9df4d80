"""Fast invariant suites behind `gnse verify`.

A condensed version of the test suite's exact-property checks: everything
here runs in seconds and needs no configuration.
"""
from __future__ import annotations

import math

import numpy as np

from . import params as P
from .mild_solver import apply_K, duhamel_integrate, picard_nodes
from .nonlinearity import bilinear_B, energy_flux, inner_l2
from .randomization import RandomSpec, build_partition, randomize, synthesize_datum
from .semigroup import heat_propagate, heat_trajectory
from .spectral import (
    Grid,
    SpectralVectorField,
    Trajectory,
    apply_fractional_power,
    leray_project,
    to_physical,
    to_spectral,
)


def _random_field(grid, rng, divfree=False):
    coeffs = rng.standard_normal((grid.d,) + grid.shape) + 1j * rng.standard_normal(
        (grid.d,) + grid.shape
    )
    f = SpectralVectorField(grid, coeffs)
    f.hermitianize()
    f.zero_mean()
    if divfree:
        f = leray_project(f)
    return f


def run_verification(verbose=True):
    checks = []
    rng = np.random.default_rng(7)
    grid = Grid(d=2, n=64, m=4)

    def check(name, ok, detail=""):
        checks.append((name, bool(ok)))
        if verbose:
            mark = "PASS" if ok else "FAIL"
            print(f"[{mark}] {name}" + (f"  ({detail})" if detail else ""))

    regs = []
    g = np.random.default_rng(11)
    for _ in range(2000):
        d = int(g.integers(2, 4))
        hi = (d + 2) / 4.0
        alpha = float(g.uniform(0.5 + 1e-6, hi))
        lo = -alpha + max(1.0 - alpha, 0.0)
        s = float(g.uniform(lo + 1e-6, -1e-6))
        regs.append(P.derive_exponents(P.validate_regime(d, alpha, s)))
    worst = max(
        max(
            abs(1.0 / e.a + 1.0 / e.b - 0.5),
            abs(1.0 / e.p + 1.0 / e.q - 0.5),
            abs(2.0 * e.regime.alpha / e.a + e.regime.d / e.p - (2.0 * e.regime.alpha - 1.0)),
        )
        for e in regs
    )
    check("exponent identities (2000 samples)", worst <= 1e-12, f"max defect {worst:.2e}")

    f = _random_field(grid, rng)
    phys = to_physical(f)
    back = to_spectral(phys, grid)
    err = np.max(np.abs(back.coeffs - f.coeffs)) / np.max(np.abs(f.coeffs))
    check("transform round trip", err <= 1e-12, f"{err:.2e}")

    v = _random_field(grid, rng)
    p1 = leray_project(v)
    p2 = leray_project(p1)
    check("leray idempotent", np.max(np.abs(p2.coeffs - p1.coeffs)) <= 1e-14 * np.max(np.abs(p1.coeffs)))
    check("leray divergence", p1.divergence_residual() <= 1e-12)
    grad = SpectralVectorField(grid, grid.xi * (1j * _random_field(grid, rng).coeffs[0])[None])
    grad.hermitianize()
    check("leray kills gradients", np.max(np.abs(leray_project(grad).coeffs)) <= 1e-12 * max(grad.max_abs(), 1e-30))

    lam = apply_fractional_power(apply_fractional_power(f, 0.7), -0.7)
    fz = f.copy().zero_mean()
    check("fractional multiplier inverse", np.max(np.abs(lam.coeffs - fz.coeffs)) <= 1e-12 * np.max(np.abs(fz.coeffs)))

    u = _random_field(grid, rng, divfree=True)
    ha = heat_propagate(heat_propagate(u, 0.3, 0.8), 0.4, 0.8)
    hb = heat_propagate(u, 0.7, 0.8)
    check("semigroup law", np.max(np.abs(ha.coeffs - hb.coeffs)) <= 1e-13 * max(hb.max_abs(), 1e-30))

    ud = SpectralVectorField(grid, u.coeffs * grid.dealias_mask[None])
    flux = energy_flux(leray_project(ud))
    scale = ud.l2() ** 2 * max(apply_fractional_power(ud, 1.0).l2(), 1e-30)
    check("advection skew-symmetry", abs(flux) <= 1e-11 * scale, f"{abs(flux) / scale:.2e}")

    reg = P.validate_regime(2, 1.0, -0.5)
    part = build_partition(grid)
    pts = np.random.default_rng(3).uniform(-grid.xi_max, grid.xi_max, size=(2000, grid.d))
    sums = part.partition_sum(pts)
    check("partition of unity sums to 1", np.max(np.abs(sums - 1.0)) <= 1e-12)

    datum = synthesize_datum(reg, grid, amplitude=1.0)
    spec = RandomSpec("gaussian", 99)
    r1 = randomize(datum, part, spec, member=5)
    r2 = randomize(datum, part, spec, member=5)
    check("randomization deterministic", np.array_equal(r1.coeffs, r2.coeffs))
    check("randomization hermitian", r1.hermitian_defect() <= 1e-13 * max(r1.max_abs(), 1e-30))
    check("randomization div-free", r1.divergence_residual() <= 1e-12)

    times = picard_nodes(0.2, 24)
    const = Trajectory(times, [u.copy() for _ in times])
    integ = duhamel_integrate(const, 1.0)
    sym = grid.xi_sq  # alpha = 1
    expect = u.coeffs * np.where(sym > 0, -np.expm1(-times[-1] * sym) / np.where(sym > 0, sym, 1.0), times[-1])[None]
    got = integ.fields[-1].coeffs
    err = np.max(np.abs(got - expect)) / max(np.max(np.abs(expect)), 1e-30)
    check("duhamel vs closed form", err <= 5e-3, f"{err:.2e}")

    h = heat_trajectory(datum, times, reg.alpha)
    zero = Trajectory(times, [SpectralVectorField.zeros(grid) for _ in times])
    k0 = apply_K(zero, h, reg.alpha)
    k0_scaled = apply_K(zero, Trajectory(times, [2.0 * fld for fld in h.fields]), reg.alpha)
    ratio = k0_scaled.fields[-1].l2() / max(k0.fields[-1].l2(), 1e-300)
    check("first iterate quadratic scaling", abs(ratio - 4.0) <= 1e-9, f"{ratio:.12f}")

    failures = sum(1 for _, ok in checks if not ok)
    if verbose:
        print(f"{len(checks) - failures}/{len(checks)} checks passed")
    return failures
