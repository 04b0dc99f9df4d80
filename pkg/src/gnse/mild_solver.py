"""Duhamel bilinear operator and Picard iteration for the short interval.

The integral operator applies the heat kernel exactly (spectral multiplier)
and interpolates only the bilinear integrand piecewise-linearly, via the
recurrence I_n = E_n I_{n-1} + (dt/2)(E_n B_{n-1} + B_n) with
E_n = exp(-(t_n - t_{n-1}) |xi|^(2*alpha)); by the exact semigroup law this
equals the full exponential-trapezoid sum at every node.  Time nodes are
clustered quadratically near t = 0 where the iterates carry t^(-mu) weights.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .nonlinearity import bilinear_B
from .norms import composite_norm, linf_l2_norm, yspace_norm
from .params import NormSpec
from .spectral import SpectralVectorField, Trajectory, dissipation_symbol


def picard_nodes(tau, node_count, include=()):
    """Quadratically clustered nodes on [0, tau], plus any required times."""
    j = np.arange(node_count + 1, dtype=np.float64)
    ts = tau * (j / node_count) ** 2
    if include:
        ts = np.union1d(ts, np.asarray(include, dtype=np.float64))
    return ts


def duhamel_integrate(b_traj, alpha):
    """int_0^t exp(-(t-s)(-Lap)^alpha) b(s) ds on the trajectory nodes."""
    grid = b_traj.grid
    sym = dissipation_symbol(grid, 2.0 * alpha)
    times = b_traj.times
    out = [SpectralVectorField.zeros(grid)]
    acc = np.zeros_like(b_traj.fields[0].coeffs)
    if times[0] != 0.0:
        raise ValueError("duhamel integral needs a t = 0 node")
    for n in range(1, len(times)):
        dt = times[n] - times[n - 1]
        decay = np.exp(-dt * sym)[None]
        acc = decay * acc + 0.5 * dt * (
            decay * b_traj.fields[n - 1].coeffs + b_traj.fields[n].coeffs
        )
        out.append(SpectralVectorField(grid, acc.copy()))
    return Trajectory(times, out, {"provenance": "duhamel"})


def duhamel_bilinear(f_traj, g_traj, alpha):
    """M(f, g): Duhamel integral of B(f, g) along shared nodes."""
    _check_nodes(f_traj, g_traj)
    b_fields = [bilinear_B(f, g) for f, g in zip(f_traj.fields, g_traj.fields)]
    return duhamel_integrate(Trajectory(f_traj.times, b_fields), alpha)


def apply_K(w_traj, h_traj, alpha):
    """Fixed-point map: -[M(w,w) + M(w,h) + M(h,w) + M(h,h)].

    By bilinearity the four terms collapse to a single advection of the
    combined field u = w + h, so one B evaluation per node suffices.
    """
    _check_nodes(w_traj, h_traj)
    b_fields = []
    for wf, hf in zip(w_traj.fields, h_traj.fields):
        u = wf + hf
        b_fields.append(bilinear_B(u, u))
    integ = duhamel_integrate(Trajectory(w_traj.times, b_fields), alpha)
    fields = [-f for f in integ.fields]
    return Trajectory(w_traj.times, fields, {"provenance": "picard"})


def _check_nodes(a, b):
    if len(a) != len(b) or not np.allclose(a.times, b.times, rtol=0.0, atol=1e-14):
        raise ValueError("trajectories must share node times")
    if a.grid != b.grid:
        raise ValueError("trajectories must share a grid")


@dataclass
class PicardConfig:
    tau: float
    nodes: int = 64
    max_iter: int = 20
    tol_residual: float = 1e-8
    norm_case: object = None  # YSpaceCase; set by the caller
    residual_norm: str = "full"  # "full" Y-norm or "lead" (first component only)

    def __post_init__(self):
        if not self.tau > 0.0:
            raise ValueError("tau must be positive")
        if self.nodes < 16:
            raise ValueError("need at least 16 time nodes")
        if not self.tol_residual > 0.0:
            raise ValueError("tol_residual must be positive")
        if self.residual_norm not in ("full", "lead"):
            raise ValueError("residual_norm must be 'full' or 'lead'")


@dataclass
class PicardResult:
    w_traj: Trajectory
    residuals: list
    contraction_ratios: list
    h_norm: float
    converged: bool
    diverged: bool = False
    iterations: int = 0
    tau: float = 0.0


def _residual_components(config):
    comps = tuple(config.norm_case.norm_components)
    if config.residual_norm == "lead":
        comps = comps[:1]
    return comps


def picard_solve(h_traj, config, alpha):
    """Iterate w <- K(w) from w = 0 until the Y-residual meets tolerance.

    Divergence (three consecutive residual increases) aborts early and
    reports ||h|| in the same norm so the caller can shrink tau.
    """
    comps = _residual_components(config)
    h_norm = composite_norm(h_traj, comps)
    grid = h_traj.grid
    w = Trajectory(h_traj.times, [SpectralVectorField.zeros(grid) for _ in h_traj.fields])
    residuals = []
    ratios = []
    grow = 0
    converged = False
    diverged = False
    it = 0
    for it in range(1, config.max_iter + 1):
        w_next = apply_K(w, h_traj, alpha)
        diff = Trajectory(w.times, [a - b for a, b in zip(w_next.fields, w.fields)])
        res = composite_norm(diff, comps)
        if residuals:
            ratios.append(res / residuals[-1] if residuals[-1] > 0 else 0.0)
        residuals.append(res)
        w = w_next
        if res <= config.tol_residual:
            converged = True
            break
        if len(residuals) >= 2 and residuals[-1] > residuals[-2]:
            grow += 1
            if grow >= 3:
                diverged = True
                break
        else:
            grow = 0
    w.metadata.update({"provenance": "picard", "alpha": alpha})
    return PicardResult(
        w_traj=w,
        residuals=residuals,
        contraction_ratios=ratios,
        h_norm=h_norm,
        converged=converged,
        diverged=diverged,
        iterations=it,
        tau=float(w.times[-1]),
    )


def picard_solve_auto(datum, alpha, config, max_halvings=8, include_times=()):
    """Convenience wrapper: halve tau until the iteration contracts.

    Rebuilds the exact heat-flow trajectory for each tau; returns the first
    converged PicardResult, or the last failed one after max_halvings.
    """
    from .semigroup import heat_trajectory

    tau = config.tau
    result = None
    for _ in range(max_halvings + 1):
        times = picard_nodes(tau, config.nodes, include=[t for t in include_times if t <= tau])
        h_traj = heat_trajectory(datum, times, alpha)
        result = picard_solve(h_traj, config, alpha)
        if result.converged:
            return result
        tau *= 0.5
    return result


def contraction_probe(w1, w2, h_traj, config, alpha):
    """Empirical contraction constant of K at a probe pair.

    ||K(w1) - K(w2)||_Y / (||w1 - w2||_Y (||w1|| + ||w2|| + ||h||)_Y).
    """
    comps = _residual_components(config)
    diff_in = composite_norm(Trajectory(w1.times, [a - b for a, b in zip(w1.fields, w2.fields)]), comps)
    if diff_in == 0.0:
        raise ValueError("probe pair must differ")
    k1 = apply_K(w1, h_traj, alpha)
    k2 = apply_K(w2, h_traj, alpha)
    diff_out = composite_norm(Trajectory(w1.times, [a - b for a, b in zip(k1.fields, k2.fields)]), comps)
    scale = (
        composite_norm(w1, comps)
        + composite_norm(w2, comps)
        + composite_norm(h_traj, comps)
    )
    return diff_out / (diff_in * scale)


def mild_residual(result, h_traj, config, alpha):
    """Y-norm and sup-L2 residual of the discrete mild equation."""
    comps = _residual_components(config)
    kw = apply_K(result.w_traj, h_traj, alpha)
    diff = Trajectory(kw.times, [a - b for a, b in zip(kw.fields, result.w_traj.fields)])
    return composite_norm(diff, comps), linf_l2_norm(diff)
