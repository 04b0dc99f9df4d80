"""Plain-text run configuration: INI sections mirroring the module layout.

Schema (all keys optional unless marked; defaults in parentheses):

    [regime]        d (2), alpha (1.0), s (-0.5)          -- required triple
    [grid]          n (256), m (64)
    [randomization] distribution (gaussian), master_seed (2024), ensemble (8),
                    datum_norm (3.0)
    [picard]        tau (0.1), nodes (64), tol (1e-10), max_iter (20)
    [evolution]     dt0 (1e-3), scheme (2), dt_growth (0.01), t_max (1e3),
                    outputs (120), ledger_stride (1)
    [decay]         t_lo (auto), t_hi (auto), radius_choice (algebraic),
                    ir_fraction (0.25)
    [paths]         workdir (.)

The GNSE_WORKDIR environment variable overrides [paths] workdir.
"""
from __future__ import annotations

import configparser
import math
import os
from dataclasses import dataclass

from . import params as P
from .decay import EnsembleConfig
from .spectral import Grid


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    regime: P.RegimeParams
    grid: Grid
    distribution: str
    master_seed: int
    ensemble: int
    datum_norm: float
    tau: float
    picard_nodes: int
    picard_tol: float
    picard_max_iter: int
    dt0: float
    scheme: int
    dt_growth: float
    t_max: float
    outputs: int
    ledger_stride: int
    t_lo: float
    t_hi: float
    radius_choice: str
    ir_fraction: float
    workdir: str

    def seeds(self):
        return tuple(range(self.ensemble))

    def ensemble_config(self):
        return EnsembleConfig(
            regime=self.regime,
            grid=self.grid,
            seeds=self.seeds(),
            datum_norm=self.datum_norm,
            distribution=self.distribution,
            master_seed=self.master_seed,
            tau=self.tau,
            picard_nodes=self.picard_nodes,
            picard_tol=self.picard_tol,
            dt0=self.dt0,
            dt_growth=self.dt_growth,
            scheme=self.scheme,
            t_max=self.t_max,
            n_outputs=self.outputs,
            ir_fraction=self.ir_fraction,
            fit_t_lo=self.t_lo,
            fit_t_hi=self.t_hi,
            radius_choice=self.radius_choice,
        )

    def snapshot(self):
        out = {
            "regime": {"d": self.regime.d, "alpha": self.regime.alpha, "s": self.regime.s},
            "grid": {"n": self.grid.n, "m": self.grid.m},
        }
        for key in (
            "distribution", "master_seed", "ensemble", "datum_norm", "tau",
            "picard_nodes", "picard_tol", "picard_max_iter", "dt0", "scheme",
            "dt_growth", "t_max", "outputs", "ledger_stride", "t_lo", "t_hi",
            "radius_choice", "ir_fraction", "workdir",
        ):
            out[key] = getattr(self, key)
        return out


def load_config(path=None, overrides=None):
    """Parse, apply overrides (dotted section.key strings), cross-validate."""
    cp = configparser.ConfigParser()
    if path is not None:
        if not os.path.exists(path):
            raise ConfigError(f"config file not found: {path}")
        cp.read(path)
    for item in overrides or ():
        key, _, value = item.partition("=")
        section, _, option = key.strip().partition(".")
        if not option or not value:
            raise ConfigError(f"override must look like section.key=value, got {item!r}")
        if not cp.has_section(section):
            cp.add_section(section)
        cp.set(section, option, value.strip())

    def get(section, key, default, conv=str):
        try:
            raw = cp.get(section, key)
        except (configparser.NoSectionError, configparser.NoOptionError):
            return default
        try:
            return conv(raw)
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key}: {exc}") from None

    try:
        regime = P.validate_regime(
            get("regime", "d", 2, int),
            get("regime", "alpha", 1.0, float),
            get("regime", "s", -0.5, float),
        )
    except P.RegimeError as exc:
        raise ConfigError(str(exc)) from None
    grid = Grid(d=regime.d, n=get("grid", "n", 256, int), m=get("grid", "m", 64, int))

    cfg = RunConfig(
        regime=regime,
        grid=grid,
        distribution=get("randomization", "distribution", "gaussian"),
        master_seed=get("randomization", "master_seed", 2024, int),
        ensemble=get("randomization", "ensemble", 8, int),
        datum_norm=get("randomization", "datum_norm", 3.0, float),
        tau=get("picard", "tau", 0.1, float),
        picard_nodes=get("picard", "nodes", 64, int),
        picard_tol=get("picard", "tol", 1e-10, float),
        picard_max_iter=get("picard", "max_iter", 20, int),
        dt0=get("evolution", "dt0", 1e-3, float),
        scheme=get("evolution", "scheme", 2, int),
        dt_growth=get("evolution", "dt_growth", 0.01, float),
        t_max=get("evolution", "t_max", 1e3, float),
        outputs=get("evolution", "outputs", 120, int),
        ledger_stride=get("evolution", "ledger_stride", 1, int),
        t_lo=get("decay", "t_lo", math.nan, float),
        t_hi=get("decay", "t_hi", math.nan, float),
        radius_choice=get("decay", "radius_choice", "algebraic"),
        ir_fraction=get("decay", "ir_fraction", 0.25, float),
        workdir=os.environ.get("GNSE_WORKDIR") or get("paths", "workdir", "."),
    )
    _cross_validate(cfg)
    return cfg


def _cross_validate(cfg):
    if cfg.distribution not in ("gaussian", "rademacher"):
        raise ConfigError(f"unknown distribution {cfg.distribution!r}")
    if not 0.0 < cfg.tau < 1.0:
        raise ConfigError("picard tau must lie in (0, 1)")
    if cfg.picard_nodes < 16:
        raise ConfigError("picard nodes must be >= 16")
    if cfg.scheme not in (1, 2):
        raise ConfigError("evolution scheme must be 1 or 2")
    if cfg.ensemble < 1:
        raise ConfigError("ensemble size must be >= 1")
    t_ir = cfg.ir_fraction * cfg.grid.m ** (2.0 * cfg.regime.alpha)
    if cfg.t_max > cfg.tau and t_ir <= math.e:
        raise ConfigError(
            f"grid does not resolve the decay window: infrared cutoff {t_ir:.3g} <= e; increase m"
        )
    if not math.isnan(cfg.t_hi) and cfg.t_hi > t_ir * (1 + 1e-12):
        raise ConfigError(f"decay t_hi {cfg.t_hi} beyond infrared cutoff {t_ir:.3g}")
    if cfg.radius_choice not in ("algebraic", "critical_log", "critical_algebraic"):
        raise ConfigError(f"unknown radius choice {cfg.radius_choice!r}")
