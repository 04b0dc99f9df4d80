"""Ensemble orchestration, Fourier-splitting diagnostics and decay-rate fits.

The long-time pipeline per seed: randomize the datum, build the mild
solution on a short interval by Picard iteration, restart the energy stepper
from the half-interval state, and record L^2 norms of u, w and the free flow
h at log-spaced output times.  Log-log slopes on the infrared-resolved
window are fitted against the predicted rates; the splitting monitors check
the energy-derivative bound and the pointwise Fourier bound along the way.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import params as P
from .evolution import StepperConfig, glue, simulate
from .mild_solver import PicardConfig, picard_nodes, picard_solve
from .randomization import RandomSpec, build_partition, randomize, scale_to_hs_norm, synthesize_datum
from .semigroup import HeatFlowProvider, _ols_loglog, heat_trajectory, resolved_window
from .spectral import Grid


@dataclass(frozen=True)
class DecayFitResult:
    slope: float
    intercept: float
    stderr: float
    r2: float
    window: tuple
    predicted: float = math.nan
    per_seed: tuple = ()
    median: float = math.nan


def fit_decay(series, window, predicted=math.nan):
    """Ordinary least squares on (log t, log value) inside the window."""
    t = np.asarray([p[0] for p in series], dtype=np.float64)
    v = np.asarray([p[1] for p in series], dtype=np.float64)
    keep = (t >= window[0]) & (t <= window[1])
    t, v = t[keep], v[keep]
    if len(t) < 10:
        raise ValueError(f"need >= 10 points in the fit window, got {len(t)}")
    if np.any(v <= 0.0):
        raise ValueError("nonpositive values in the fit window")
    slope, intercept, stderr, r2 = _ols_loglog(t, v)
    return DecayFitResult(slope, intercept, stderr, r2, (float(t[0]), float(t[-1])), predicted)


def ball_energy(field, radius):
    """L^d-weighted coefficient mass inside |xi| <= radius."""
    if radius <= 0.0:
        raise ValueError("radius must be positive")
    g = field.grid
    inside = g.xi_abs <= radius
    return float(np.sum(np.abs(field.coeffs[:, inside]) ** 2) * g.box_length**g.d)


def splitting_radius(t, regime, choice):
    """The two shrinking-frequency laws used by the splitting argument."""
    al, d = regime.alpha, regime.d
    if choice == "algebraic":
        return (d / t) ** (1.0 / (2.0 * al))
    if choice == "critical_log":
        if t <= math.e:
            raise ValueError("logarithmic radius needs t > e")
        return (2.0 / 3.0 * t * math.log(t)) ** (-1.0 / (2.0 * al))
    if choice == "critical_algebraic":
        return (2.0 / t) ** (1.0 / (2.0 * al))
    raise ValueError(f"unknown radius choice {choice!r}")


@dataclass
class SplittingDiagnostic:
    choice: str
    t: np.ndarray
    radius: np.ndarray
    ball: np.ndarray
    total: np.ndarray
    ratio: np.ndarray
    log_fit_slope: float = math.nan
    log_fit_window: tuple = ()


def splitting_report(w_traj, regime, choice="algebraic"):
    """Ball energies at the shrinking radius along a trajectory.

    For the critical-log choice the intermediate bound is additionally
    fitted: the slope of log ||w||^2 against log log t over the usable
    nodes (paper-predicted exponent -3/2, any slope <= -1 accepted by the
    acceptance gate).
    """
    ts, radii, balls, totals = [], [], [], []
    for t, f in w_traj:
        if t <= 0.0 or (choice == "critical_log" and t <= math.e):
            continue
        r = splitting_radius(t, regime, choice)
        tot = f.l2() ** 2
        ts.append(t)
        radii.append(r)
        balls.append(ball_energy(f, r))
        totals.append(tot)
    ts = np.asarray(ts)
    balls = np.asarray(balls)
    totals = np.asarray(totals)
    diag = SplittingDiagnostic(
        choice=choice,
        t=ts,
        radius=np.asarray(radii),
        ball=balls,
        total=totals,
        ratio=np.where(totals > 0, balls / np.maximum(totals, 1e-300), 0.0),
    )
    if choice == "critical_log" and len(ts) >= 10 and np.all(totals > 0):
        slope, _, _, _ = _ols_loglog(np.log(ts), totals)
        diag.log_fit_slope = slope
        diag.log_fit_window = (float(ts[0]), float(ts[-1]))
    return diag


def pointwise_bound_check(w_traj, regime, T0):
    """Max of |w_hat| / (|xi| (int ||w||^2 + t^(1+s/alpha))) past T0.

    w_hat uses the continuum-transform scaling L^d * coeff so the ratio is
    comparable across resolutions; the companion two-resolution stability
    factor is taken by the caller.
    """
    g = w_traj.grid
    times = w_traj.times
    l2sq = np.array([f.l2() ** 2 for f in w_traj.fields])
    mask = times > T0
    if not np.any(mask):
        raise ValueError("trajectory does not extend past T0")
    # cumulative integral of ||w||^2 from T0 by trapezoid on the node times
    max_ratio = 0.0
    argmax = (math.nan, math.nan)
    boxfac = g.box_length**g.d
    nz = g.xi_abs > 0
    for i in np.nonzero(mask)[0]:
        sel = (times >= T0) & (times <= times[i])
        integral = float(np.trapezoid(l2sq[sel], times[sel])) if np.sum(sel) > 1 else 0.0
        denom_t = integral + times[i] ** (1.0 + regime.s / regime.alpha)
        what = boxfac * np.sqrt(np.sum(np.abs(w_traj.fields[i].coeffs) ** 2, axis=0))
        ratio = np.max(what[nz] / (g.xi_abs[nz] * denom_t))
        if ratio > max_ratio:
            max_ratio = float(ratio)
            argmax = (float(times[i]), float(denom_t))
    return {"max_ratio": max_ratio, "at_time": argmax[0], "denominator": argmax[1]}


def estimate_T0(ledger, regime, consecutive=20, quantile=0.95):
    """Empirical onset time of the energy-derivative inequality.

    Fits the envelope constant as the given quantile of the ratio
    (d/dt ||w||^2 + ||Lambda^alpha w||^2) / t^(-(d+2)/(2a)+1+2s/a) over rows
    with t > e, then returns (T0, C) with T0 the first time from which the
    inequality holds for `consecutive` rows.
    """
    arr = ledger.as_arrays()
    t = arr["t"]
    expo = -(regime.d + 2.0) / (2.0 * regime.alpha) + 1.0 + 2.0 * regime.s / regime.alpha
    lhs = arr["ddt_l2w_sq"] + arr["hal_w_sq"]
    mask = t > math.e
    if np.sum(mask) < consecutive + 1:
        raise ValueError("ledger too short past t = e")
    envelope = t[mask] ** expo
    ratio = lhs[mask] / envelope
    C = float(np.quantile(ratio, quantile))
    C = max(C, 1e-300)
    ok = ratio <= C * (1.0 + 1e-9)
    run = 0
    idx = np.nonzero(mask)[0]
    for pos, good in enumerate(ok):
        run = run + 1 if good else 0
        if run >= consecutive:
            return float(t[idx[pos - consecutive + 1]]), C
    return float(t[idx[0]]), C


def lemma51_holds_fraction(ledger, regime, T0, C):
    """Fraction of post-T0 rows satisfying the fitted inequality."""
    arr = ledger.as_arrays()
    t = arr["t"]
    expo = -(regime.d + 2.0) / (2.0 * regime.alpha) + 1.0 + 2.0 * regime.s / regime.alpha
    lhs = arr["ddt_l2w_sq"] + arr["hal_w_sq"]
    mask = t > T0
    if not np.any(mask):
        return 0.0
    return float(np.mean(lhs[mask] <= C * t[mask] ** expo * (1.0 + 1e-9)))


@dataclass
class EnsembleConfig:
    regime: P.RegimeParams
    grid: Grid
    seeds: tuple
    datum_norm: float = 3.0  # target homogeneous s-norm of the deterministic datum
    distribution: str = "gaussian"
    master_seed: int = 2024
    tau: float = 0.1
    picard_nodes: int = 64
    picard_tol: float = 1e-10
    dt0: float = 1e-3
    dt_growth: float = 0.01
    scheme: int = 2
    t_max: float = 1e3
    n_outputs: int = 120
    ir_fraction: float = 0.25
    fit_t_lo: float = math.nan  # override; default max(e, fitted T0)
    fit_t_hi: float = math.nan  # override; default ir_fraction * m^(2 alpha)
    radius_choice: str = "algebraic"

    def __post_init__(self):
        t_ir = self.ir_fraction * self.grid.m ** (2.0 * self.regime.alpha)
        if not math.isnan(self.fit_t_hi) and self.fit_t_hi > t_ir * (1.0 + 1e-12):
            raise ValueError(f"fit window end {self.fit_t_hi} beyond infrared cutoff {t_ir}")
        if self.t_max <= self.tau:
            raise ValueError("t_max must exceed tau")


@dataclass
class SeedResult:
    seed: int
    times: np.ndarray
    u_sq: np.ndarray
    w_sq: np.ndarray
    h_sq: np.ndarray
    T0: float
    envelope_C: float
    lemma51_fraction: float
    overlap_discrepancy: float
    picard_iterations: int
    picard_tau: float
    error: str = ""


@dataclass
class EnsembleResult:
    config: EnsembleConfig
    seeds: list
    window: tuple
    u_fit: DecayFitResult = None
    w_fit: DecayFitResult = None
    h_fit: DecayFitResult = None


def output_time_grid(cfg):
    t_start = cfg.tau / 2.0
    return np.unique(
        np.concatenate(
            [
                [t_start, cfg.tau],
                np.exp(np.linspace(math.log(cfg.tau), math.log(cfg.t_max), cfg.n_outputs)),
            ]
        )
    )


def run_seed(cfg, seed, ycase=None, exps=None):
    """Full pipeline for one ensemble member."""
    regime, grid = cfg.regime, cfg.grid
    if exps is None:
        exps = P.derive_exponents(regime)
    if ycase is None:
        ycase = P.classify_yspace(regime, exps)
    base = synthesize_datum(regime, grid, amplitude=1.0)
    base = scale_to_hs_norm(base, regime.s, cfg.datum_norm)
    partition = build_partition(grid)
    rspec = RandomSpec(distribution=cfg.distribution, master_seed=cfg.master_seed)
    datum = randomize(base, partition, rspec, member=seed)

    alpha = regime.alpha
    h_provider = HeatFlowProvider(datum, alpha)
    nodes = picard_nodes(cfg.tau, cfg.picard_nodes, include=[cfg.tau / 2.0])
    h_traj = heat_trajectory(datum, nodes, alpha)
    pic_cfg = PicardConfig(
        tau=cfg.tau,
        nodes=cfg.picard_nodes,
        tol_residual=cfg.picard_tol,
        norm_case=ycase,
        residual_norm="lead" if regime.is_critical else "full",
    )
    pic = picard_solve(h_traj, pic_cfg, alpha)
    if not pic.converged:
        raise RuntimeError(
            f"picard failed to contract at tau={cfg.tau} with ||h||_Y={pic.h_norm:.3g}"
        )
    i_half = int(np.argmin(np.abs(pic.w_traj.times - cfg.tau / 2.0)))
    w_half = pic.w_traj.fields[i_half]

    out_times = output_time_grid(cfg)
    step_cfg = StepperConfig(dt0=cfg.dt0, scheme=cfg.scheme, dt_growth=cfg.dt_growth)
    w_traj, ledger = simulate(
        w_half, cfg.tau / 2.0, cfg.t_max, alpha, h_provider, step_cfg, output_times=out_times
    )
    _, disc = glue(pic.w_traj, w_traj)

    times = w_traj.times
    h_sq, w_sq, u_sq = [], [], []
    for t, wf in w_traj:
        hf = h_provider(t)
        h_sq.append(hf.l2() ** 2)
        w_sq.append(wf.l2() ** 2)
        u_sq.append((wf + hf).l2() ** 2)
    try:
        T0, C = estimate_T0(ledger, regime)
        frac = lemma51_holds_fraction(ledger, regime, T0, C)
    except ValueError:
        T0, C, frac = math.e, math.nan, math.nan
    return SeedResult(
        seed=seed,
        times=np.asarray(times),
        u_sq=np.asarray(u_sq),
        w_sq=np.asarray(w_sq),
        h_sq=np.asarray(h_sq),
        T0=T0,
        envelope_C=C,
        lemma51_fraction=frac,
        overlap_discrepancy=disc,
        picard_iterations=pic.iterations,
        picard_tau=pic.tau,
    ), w_traj, ledger


def run_ensemble(cfg, keep_trajectories=False):
    """Run every seed (failures are recorded, not fatal) and fit the rates."""
    results = []
    trajs = {}
    for seed in cfg.seeds:
        try:
            res, w_traj, ledger = run_seed(cfg, seed)
            if keep_trajectories:
                trajs[seed] = (w_traj, ledger)
        except Exception as exc:  # noqa: BLE001 - per-seed failures are data
            res = SeedResult(
                seed=seed,
                times=np.array([]),
                u_sq=np.array([]),
                w_sq=np.array([]),
                h_sq=np.array([]),
                T0=math.nan,
                envelope_C=math.nan,
                lemma51_fraction=math.nan,
                overlap_discrepancy=math.nan,
                picard_iterations=0,
                picard_tau=math.nan,
                error=f"{type(exc).__name__}: {exc}",
            )
        results.append(res)
    good = [r for r in results if not r.error]
    window = ensemble_window(cfg, good)
    out = EnsembleResult(config=cfg, seeds=results, window=window)
    if good:
        u_pred, w_pred = P.decay_exponents(cfg.regime)
        out.u_fit = _ensemble_fit(good, "u_sq", window, u_pred)
        out.w_fit = _ensemble_fit(good, "w_sq", window, w_pred)
        out.h_fit = _ensemble_fit(good, "h_sq", window, u_pred)
    if keep_trajectories:
        out.trajectories = trajs
    return out


def ensemble_window(cfg, good_seeds):
    t_ir = cfg.ir_fraction * cfg.grid.m ** (2.0 * cfg.regime.alpha)
    t_hi = cfg.fit_t_hi if not math.isnan(cfg.fit_t_hi) else min(t_ir, cfg.t_max)
    if not math.isnan(cfg.fit_t_lo):
        t_lo = cfg.fit_t_lo
    elif good_seeds:
        t_lo = max(math.e, float(np.median([r.T0 for r in good_seeds])))
    else:
        t_lo = math.e
    return (t_lo, t_hi)


def _ensemble_fit(results, attr, window, predicted):
    per_seed = []
    for r in results:
        series = list(zip(r.times, getattr(r, attr)))
        per_seed.append(fit_decay(series, window, predicted).slope)
    per_seed = tuple(per_seed)
    med = float(np.median(per_seed))
    pooled_t = np.concatenate([r.times for r in results])
    pooled_v = np.concatenate([getattr(r, attr) for r in results])
    pooled = fit_decay(list(zip(pooled_t, pooled_v)), window, predicted)
    return DecayFitResult(
        slope=pooled.slope,
        intercept=pooled.intercept,
        stderr=pooled.stderr,
        r2=pooled.r2,
        window=pooled.window,
        predicted=predicted,
        per_seed=per_seed,
        median=med,
    )
