"""Command-line front end.

Subcommands: params | randomize | picard | simulate | decay-fit | verify.
Pipeline files live in the working directory (override with --out or
GNSE_WORKDIR) under member-indexed names:

    datum_m{k}.gnse                  randomized initial data
    picard_m{k}_whalf.gnse / _wtau.gnse / _residuals.csv (+ .png)
    series_m{k}.csv                  t, u_sq, w_sq, h_sq at output times
    ledger_m{k}.csv                  energy ledger rows
    sim_m{k}_final.gnse              final state (+ periodic sim_m{k}_step*.gnse)
    report.txt, decay.png, ...       decay-fit outputs
    manifest.json                    artifact index, updated by every command
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__
from . import params as P
from .checkpoint import RunManifest, read_checkpoint, read_csv, write_checkpoint, write_csv
from .config import ConfigError, load_config
from .decay import (
    DecayFitResult,
    ensemble_window,
    estimate_T0,
    fit_decay,
    lemma51_holds_fraction,
    splitting_report,
)
from .evolution import EnergyLedger, StepperConfig, glue, simulate
from .mild_solver import PicardConfig, picard_nodes, picard_solve
from .randomization import RandomSpec, build_partition, randomize, scale_to_hs_norm, synthesize_datum
from .semigroup import HeatFlowProvider, heat_trajectory
from .spectral import SpectralVectorField


def _workdir(args, cfg=None):
    path = args.out or os.environ.get("GNSE_WORKDIR") or (cfg.workdir if cfg else ".")
    os.makedirs(path, exist_ok=True)
    return path


def _load_manifest(workdir, command, cfg):
    path = os.path.join(workdir, "manifest.json")
    snapshot = cfg.snapshot() if cfg else {}
    manifest = RunManifest(command=command, config_snapshot=snapshot, code_version=__version__)
    if os.path.exists(path):
        with open(path) as fh:
            old = json.load(fh)
        manifest.artifacts = [a for a in old.get("artifacts", []) if os.path.exists(a)]
        manifest.seed_status = old.get("seed_status", {})
        manifest.timings = old.get("timings", {})
    return manifest, path


def cmd_params(args):
    try:
        regime = P.validate_regime(args.d, args.alpha, args.s)
    except P.RegimeError as exc:
        print(f"invalid regime: {exc}", file=sys.stderr)
        return 2
    exps = P.derive_exponents(regime)
    u_slope, w_slope = P.decay_exponents(regime)
    print(f"regime          d={regime.d} alpha={regime.alpha} s={regime.s}")
    print(f"mu              {exps.mu:.12g}")
    print(f"a               {exps.a:.12g}")
    print(f"b               {exps.b:.12g}")
    print(f"p               {exps.p:.12g}")
    print(f"q               {exps.q:.12g}")
    print(f"lambda          {exps.lam:.12g}")
    print(f"r_s             {exps.r_s:.12g}")
    try:
        ycase = P.classify_yspace(regime, exps)
        print(f"Y-case          {ycase.case_id} ({len(ycase.norm_components)} norms)")
    except P.RegimeError as exc:
        print(f"Y-case          unavailable ({exc.code})")
    if regime.is_critical:
        print("ladder          not applicable (critical alpha; log-splitting path)")
    else:
        ladder = P.classify_decay_ladder(regime)
        print(
            f"ladder          A_{ladder.n}^({ladder.j})"
            f"  terminal A_{ladder.terminal_n}^({ladder.terminal_j})"
            f"  rungs {list(ladder.rungs)}"
        )
        if ladder.j == 3:
            print(f"ladder slope    {ladder.w_slope:.12g} (intermediate)")
    print(f"u^2 slope       {u_slope:.12g}")
    print(f"w^2 slope       {w_slope:.12g}")
    return 0


def _base_datum(cfg):
    base = synthesize_datum(cfg.regime, cfg.grid, amplitude=1.0)
    return scale_to_hs_norm(base, cfg.regime.s, cfg.datum_norm)


def _members(args, cfg):
    if args.member is not None:
        return [args.member]
    return list(range(cfg.ensemble))


def cmd_randomize(args):
    cfg = load_config(args.config, args.set)
    workdir = _workdir(args, cfg)
    manifest, mpath = _load_manifest(workdir, "randomize", cfg)
    t0 = time.perf_counter()
    base = _base_datum(cfg)
    partition = build_partition(cfg.grid)
    seed = args.seed if args.seed is not None else cfg.master_seed
    rspec = RandomSpec(distribution=cfg.distribution, master_seed=seed)
    for member in _members(args, cfg):
        field = randomize(base, partition, rspec, member)
        path = os.path.join(workdir, f"datum_m{member}.gnse")
        write_checkpoint(path, field, cfg.regime.alpha, cfg.regime.s, seed=seed, member=member, time=0.0)
        manifest.add_artifact(path)
        manifest.seed_status[str(member)] = "randomized"
        print(f"wrote {path}")
    manifest.timings["randomize"] = time.perf_counter() - t0
    manifest.write(mpath)
    return 0


def _read_datum(workdir, cfg, member):
    path = os.path.join(workdir, f"datum_m{member}.gnse")
    if not os.path.exists(path):
        raise FileNotFoundError(f"{path} (run `gnse randomize` first)")
    field, header = read_checkpoint(path)
    if header["d"] != cfg.grid.d or header["n"] != cfg.grid.n or header["m"] != cfg.grid.m:
        raise ConfigError(f"checkpoint grid {header} does not match config grid {cfg.grid}")
    if abs(header["alpha"] - cfg.regime.alpha) > 1e-12 or abs(header["s"] - cfg.regime.s) > 1e-12:
        raise ConfigError("checkpoint regime does not match config")
    return field, header


def cmd_picard(args):
    cfg = load_config(args.config, args.set)
    workdir = _workdir(args, cfg)
    manifest, mpath = _load_manifest(workdir, "picard", cfg)
    exps = P.derive_exponents(cfg.regime)
    ycase = P.classify_yspace(cfg.regime, exps)
    t_start = time.perf_counter()
    status = 0
    for member in _members(args, cfg):
        datum, header = _read_datum(workdir, cfg, member) if not args.ic else (read_checkpoint(args.ic)[0], None)
        nodes = picard_nodes(cfg.tau, cfg.picard_nodes, include=[cfg.tau / 2.0])
        h_traj = heat_trajectory(datum, nodes, cfg.regime.alpha)
        pcfg = PicardConfig(
            tau=cfg.tau,
            nodes=cfg.picard_nodes,
            max_iter=cfg.picard_max_iter,
            tol_residual=cfg.picard_tol,
            norm_case=ycase,
            residual_norm="lead" if cfg.regime.is_critical else "full",
        )
        result = picard_solve(h_traj, pcfg, cfg.regime.alpha)
        csv_path = os.path.join(workdir, f"picard_m{member}_residuals.csv")
        write_csv(
            csv_path,
            ("iteration", "residual", "ratio"),
            [
                (i + 1, r, result.contraction_ratios[i - 1] if 0 < i <= len(result.contraction_ratios) else math.nan)
                for i, r in enumerate(result.residuals)
            ],
        )
        manifest.add_artifact(csv_path)
        if not result.converged:
            print(
                f"member {member}: no contraction at tau={cfg.tau} "
                f"(||h||_Y = {result.h_norm:.4g}); shrink tau or the datum norm",
                file=sys.stderr,
            )
            manifest.seed_status[str(member)] = "picard-failed"
            status = 3
            continue
        i_half = int(np.argmin(np.abs(result.w_traj.times - cfg.tau / 2.0)))
        for tag, idx in (("whalf", i_half), ("wtau", len(result.w_traj.times) - 1)):
            path = os.path.join(workdir, f"picard_m{member}_{tag}.gnse")
            write_checkpoint(
                path,
                result.w_traj.fields[idx],
                cfg.regime.alpha,
                cfg.regime.s,
                seed=cfg.master_seed,
                member=member,
                time=float(result.w_traj.times[idx]),
            )
            manifest.add_artifact(path)
        if not args.no_figures:
            from .plots import residual_figure

            fig_path = os.path.join(workdir, f"picard_m{member}_residuals.png")
            residual_figure(fig_path, result.residuals, title=f"member {member}")
            manifest.add_artifact(fig_path)
        manifest.seed_status[str(member)] = "picard-ok"
        print(
            f"member {member}: converged in {result.iterations} iterations, "
            f"final residual {result.residuals[-1]:.3e}, ||h||_Y = {result.h_norm:.4g}"
        )
    manifest.timings["picard"] = time.perf_counter() - t_start
    manifest.write(mpath)
    return status


def cmd_simulate(args):
    cfg = load_config(args.config, args.set)
    workdir = _workdir(args, cfg)
    manifest, mpath = _load_manifest(workdir, "simulate", cfg)
    t_start = time.perf_counter()
    for member in _members(args, cfg):
        datum, _ = _read_datum(workdir, cfg, member)
        h_provider = HeatFlowProvider(datum, cfg.regime.alpha)
        if args.resume:
            state, header = read_checkpoint(args.resume)
            t0 = header["time"]
        else:
            ic_path = args.ic or os.path.join(workdir, f"picard_m{member}_whalf.gnse")
            state, header = read_checkpoint(ic_path)
            t0 = header["time"]
        out_times = np.exp(np.linspace(math.log(max(t0, 1e-12)), math.log(cfg.t_max), cfg.outputs))
        out_times = np.unique(np.concatenate([[t0, cfg.t_max], out_times[out_times > t0]]))
        scfg = StepperConfig(
            dt0=cfg.dt0, scheme=cfg.scheme, dt_growth=cfg.dt_growth, ledger_stride=cfg.ledger_stride
        )
        traj, ledger = simulate(
            state, t0, cfg.t_max, cfg.regime.alpha, h_provider, scfg, output_times=out_times
        )
        ledger_path = os.path.join(workdir, f"ledger_m{member}.csv")
        write_csv(ledger_path, EnergyLedger.COLUMNS, list(ledger.rows()))
        rows = []
        for t, wf in traj:
            hf = h_provider(t)
            rows.append((t, (wf + hf).l2() ** 2, wf.l2() ** 2, hf.l2() ** 2))
        series_path = os.path.join(workdir, f"series_m{member}.csv")
        write_csv(series_path, ("t", "u_sq", "w_sq", "h_sq"), rows)
        final_path = os.path.join(workdir, f"sim_m{member}_final.gnse")
        write_checkpoint(
            final_path,
            traj.fields[-1],
            cfg.regime.alpha,
            cfg.regime.s,
            seed=cfg.master_seed,
            member=member,
            time=float(traj.times[-1]),
        )
        for p in (ledger_path, series_path, final_path):
            manifest.add_artifact(p)
        manifest.seed_status[str(member)] = "simulated"
        print(f"member {member}: evolved to t = {traj.times[-1]:.6g}, {len(ledger.t)} ledger rows")
    manifest.timings["simulate"] = time.perf_counter() - t_start
    manifest.write(mpath)
    return 0


def cmd_decay_fit(args):
    cfg = load_config(args.config, args.set)
    workdir = _workdir(args, cfg)
    manifest, mpath = _load_manifest(workdir, "decay-fit", cfg)
    regime = cfg.regime
    u_pred, w_pred = P.decay_exponents(regime)
    series = {}
    for member in _members(args, cfg):
        path = os.path.join(workdir, f"series_m{member}.csv")
        if not os.path.exists(path):
            continue
        cols, data = read_csv(path)
        series[member] = dict(zip(cols, data.T))
    if not series:
        print("no series CSVs found; run `gnse simulate` first", file=sys.stderr)
        return 2

    t_ir = cfg.ir_fraction * cfg.grid.m ** (2.0 * regime.alpha)
    T0s = {}
    fracs = {}
    for member in series:
        lpath = os.path.join(workdir, f"ledger_m{member}.csv")
        if os.path.exists(lpath):
            cols, data = read_csv(lpath)
            led = EnergyLedger()
            arr = dict(zip(cols, data.T))
            led.t = list(arr["t"])
            led.l2w_sq = list(arr["l2w_sq"])
            led.hal_w_sq = list(arr["hal_w_sq"])
            led.flux_wwh = list(arr["flux_wwh"])
            led.flux_hwh = list(arr["flux_hwh"])
            ddt = np.empty_like(arr["t"])
            ddt[1:] = np.diff(arr["l2w_sq"]) / np.diff(arr["t"])
            ddt[0] = ddt[1] if len(ddt) > 1 else 0.0
            led.ddt_l2w_sq = list(ddt)
            led.energy_residual = list(arr["energy_residual"])
            try:
                T0, C = estimate_T0(led, regime)
                T0s[member] = T0
                fracs[member] = lemma51_holds_fraction(led, regime, T0, C)
            except ValueError:
                pass
    t_lo = cfg.t_lo if not math.isnan(cfg.t_lo) else max(math.e, float(np.median(list(T0s.values()))) if T0s else math.e)
    t_hi = cfg.t_hi if not math.isnan(cfg.t_hi) else min(t_ir, cfg.t_max)
    window = (t_lo, t_hi)
    span_ok = t_hi / t_lo >= 10.0

    report_lines = [
        f"decay-fit report (keys: window, flagged, per_seed.*, median.*, predicted.*)",
        f"window: [{t_lo:.6g}, {t_hi:.6g}]  infrared_cutoff: {t_ir:.6g}",
        f"flagged: {'ok' if span_ok else 'under-resolved (fit window below one decade)'}",
        f"predicted.u_sq: {u_pred:+.6f}",
        f"predicted.w_sq: {w_pred:+.6f}",
        f"predicted.h_sq: {u_pred:+.6f}",
    ]
    fits = {}
    for key, predicted in (("u_sq", u_pred), ("w_sq", w_pred), ("h_sq", u_pred)):
        slopes = {}
        for member, data in series.items():
            try:
                fit = fit_decay(list(zip(data["t"], data[key])), window, predicted)
                slopes[member] = fit.slope
            except ValueError as exc:
                report_lines.append(f"per_seed.{key}.m{member}: unfit ({exc})")
        if not slopes:
            continue
        med = float(np.median(list(slopes.values())))
        pooled_t = np.concatenate([series[m]["t"] for m in slopes])
        pooled_v = np.concatenate([series[m][key] for m in slopes])
        pooled = fit_decay(list(zip(pooled_t, pooled_v)), window, predicted)
        fits[key] = DecayFitResult(
            slope=pooled.slope, intercept=pooled.intercept, stderr=pooled.stderr,
            r2=pooled.r2, window=window, predicted=predicted,
            per_seed=tuple(slopes.values()), median=med,
        )
        for member, slope in slopes.items():
            report_lines.append(f"per_seed.{key}.m{member}: {slope:+.6f}")
        report_lines.append(f"median.{key}: {med:+.6f}")
    for member, T0 in T0s.items():
        report_lines.append(f"per_seed.T0.m{member}: {T0:.6g}")
        report_lines.append(f"per_seed.lemma51_fraction.m{member}: {fracs[member]:.4f}")
    passed = True
    if "u_sq" in fits:
        ok = abs(fits["u_sq"].median - u_pred) <= 0.1 if span_ok else True
        report_lines.append(f"pass.u_sq: {ok}")
        passed &= ok
    if "h_sq" in fits:
        ok = all(abs(sl - u_pred) <= 0.05 for sl in fits["h_sq"].per_seed) if span_ok else True
        report_lines.append(f"pass.h_sq: {ok}")
        passed &= ok
    if "w_sq" in fits:
        ok = abs(fits["w_sq"].median - w_pred) <= 0.2 if span_ok else True
        report_lines.append(f"pass.w_sq: {ok}")
        passed &= ok
    report_lines.append(f"pass.all: {passed}")

    report_path = os.path.join(workdir, "report.txt")
    with open(report_path, "w") as fh:
        fh.write("\n".join(report_lines) + "\n")
    manifest.add_artifact(report_path)
    print("\n".join(report_lines))
    if not args.no_figures and fits:
        from types import SimpleNamespace

        from .plots import decay_figure

        seed_objs = [
            SimpleNamespace(
                error="", times=np.asarray(data["t"]), u_sq=data["u_sq"],
                w_sq=data["w_sq"], h_sq=data["h_sq"],
            )
            for data in series.values()
        ]
        fig_path = os.path.join(workdir, "decay.png")
        decay_figure(fig_path, seed_objs, window, fits, title=f"d={regime.d}, alpha={regime.alpha}, s={regime.s}")
        manifest.add_artifact(fig_path)
    manifest.write(mpath)
    return 0 if passed else 4


def cmd_verify(args):
    from .verify import run_verification

    failures = run_verification(verbose=True)
    return 0 if failures == 0 else 5


def main(argv=None):
    parser = argparse.ArgumentParser(prog="gnse", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_params = sub.add_parser("params", help="print the derived exponent table")
    p_params.add_argument("d", type=int)
    p_params.add_argument("alpha", type=float)
    p_params.add_argument("s", type=float)
    p_params.set_defaults(func=cmd_params)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="INI config path")
    common.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="config override, repeatable")
    common.add_argument("--out", default=None, help="working directory (default: config/GNSE_WORKDIR)")
    common.add_argument("--seed", type=int, default=None, help="master seed override")
    common.add_argument("--member", type=int, default=None, help="single ensemble member")
    common.add_argument("--jobs", type=int, default=1, help="reserved for parallel member loops")
    common.add_argument("--no-figures", action="store_true", help="skip PNG rendering")

    p_rand = sub.add_parser("randomize", parents=[common], help="write randomized data checkpoints")
    p_rand.set_defaults(func=cmd_randomize)

    p_pic = sub.add_parser("picard", parents=[common], help="short-time mild solution")
    p_pic.add_argument("--ic", default=None, help="explicit datum checkpoint")
    p_pic.set_defaults(func=cmd_picard)

    p_sim = sub.add_parser("simulate", parents=[common], help="long-time evolution")
    p_sim.add_argument("--ic", default=None, help="initial state checkpoint")
    p_sim.add_argument("--resume", default=None, help="resume from a checkpoint")
    p_sim.set_defaults(func=cmd_simulate)

    p_fit = sub.add_parser("decay-fit", parents=[common], help="fit decay rates from series CSVs")
    p_fit.set_defaults(func=cmd_decay_fit)

    p_ver = sub.add_parser("verify", help="run the fast invariant suites")
    p_ver.set_defaults(func=cmd_verify)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
