"""Figure rendering for the report paths (batch backend, files only)."""
from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def decay_figure(path, seed_results, window, fits, title=""):
    """Log-log decay curves per seed with fitted-slope guide lines."""
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    colors = {"u_sq": "tab:blue", "w_sq": "tab:red", "h_sq": "tab:green"}
    labels = {"u_sq": r"$\|u\|_2^2$", "w_sq": r"$\|w\|_2^2$", "h_sq": r"$\|h\|_2^2$"}
    for attr, color in colors.items():
        for r in seed_results:
            if r.error or not len(r.times):
                continue
            ax.loglog(r.times, getattr(r, attr), color=color, alpha=0.25, lw=0.8)
        fit = fits.get(attr)
        if fit is None:
            continue
        t = np.asarray(window)
        guide = np.exp(fit.intercept) * t**fit.slope
        ax.loglog(t, guide, color=color, lw=1.8,
                  label=f"{labels[attr]}: fit {fit.median:+.3f} (target {fit.predicted:+.3f})")
    ax.axvspan(*window, color="0.92", zorder=0)
    ax.set_xlabel("t")
    ax.set_ylabel("squared $L^2$ norm")
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8, loc="lower left")
    fig.tight_layout()
    fig.savefig(path, dpi=160)
    plt.close(fig)
    return path


def ledger_figure(path, ledger, regime, T0=math.nan, C=math.nan):
    arr = ledger.as_arrays()
    t = arr["t"]
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    lhs = arr["ddt_l2w_sq"] + arr["hal_w_sq"]
    pos = lhs > 0
    ax.loglog(t[pos], lhs[pos], ".", ms=2, label=r"$d_t\|w\|^2 + \|\Lambda^\alpha w\|^2$ (positive part)")
    if not math.isnan(C):
        expo = -(regime.d + 2.0) / (2.0 * regime.alpha) + 1.0 + 2.0 * regime.s / regime.alpha
        ax.loglog(t, C * t**expo, "-", lw=1.4, label=f"fitted envelope, exponent {expo:+.3f}")
    if not math.isnan(T0):
        ax.axvline(T0, color="k", ls="--", lw=0.8, label=f"$T_0$ = {T0:.3g}")
    ax.set_xlabel("t")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=160)
    plt.close(fig)
    return path


def residual_figure(path, residuals, title="Picard residuals"):
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    ax.semilogy(range(1, len(residuals) + 1), residuals, "o-")
    ax.set_xlabel("iteration")
    ax.set_ylabel("Y-norm residual")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=160)
    plt.close(fig)
    return path


def splitting_figure(path, diag):
    fig, ax = plt.subplots(figsize=(5.6, 3.8))
    ax.semilogx(diag.t, diag.ratio, "o-", ms=3)
    ax.set_xlabel("t")
    ax.set_ylabel("ball / total energy")
    ax.set_title(f"splitting radius: {diag.choice}")
    ax.set_ylim(0, 1.05)
    fig.tight_layout()
    fig.savefig(path, dpi=160)
    plt.close(fig)
    return path
