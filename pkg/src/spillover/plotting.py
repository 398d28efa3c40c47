"""Static SVG figures: IRF small multiples, local-projection paths, model curves."""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

matplotlib.rcParams["svg.hashsalt"] = "spillover"

_SVG_META = {"Date": None, "Creator": None}


def _save(fig, path):
    fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)


def irf_grid(result, path, compare=None, labels=("", ""), ncols: int = 4, title: str | None = None):
    """Median line with 68% (dark) and 90% (light) bands per variable."""
    n = len(result.variables)
    nrows = math.ceil(n / ncols)
    fig, axes = plt.subplots(nrows, ncols, figsize=(3.2 * ncols, 2.4 * nrows), squeeze=False)
    h = np.arange(result.summary.shape[0])
    styles = [(result, "tab:blue", labels[0])]
    if compare is not None:
        styles.append((compare, "tab:red", labels[1]))
    for v, name in enumerate(result.variables):
        ax = axes[v // ncols][v % ncols]
        for res, color, label in styles:
            s = res.summary[:, v]
            ax.fill_between(h, s[:, 3], s[:, 4], color=color, alpha=0.15, linewidth=0)
            ax.fill_between(h, s[:, 1], s[:, 2], color=color, alpha=0.35, linewidth=0)
            ax.plot(h, s[:, 0], color=color, linewidth=1.4, label=label or None)
        ax.axhline(0, color="black", linewidth=0.6)
        ax.set_title(name, fontsize=9)
        ax.tick_params(labelsize=7)
    for v in range(n, nrows * ncols):
        axes[v // ncols][v % ncols].axis("off")
    if compare is not None and any(labels):
        axes[0][0].legend(fontsize=7)
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    _save(fig, path)


def lp_path(results, path, coef: str = "interaction", level: float = 0.90, title: str | None = None):
    from scipy import stats

    h = np.array([r.horizon for r in results])
    b = np.array([r[coef] for r in results])
    se = np.array([r.se_of(coef) for r in results])
    z = stats.norm.ppf(0.5 + level / 2)
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.fill_between(h, b - z * se, b + z * se, color="lightblue", alpha=0.7, linewidth=0)
    ax.plot(h, b, color="black", linewidth=1.5)
    ax.axhline(0, color="grey", linewidth=0.6)
    ax.set_xlabel("quarters after shock")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    _save(fig, path)


def model_curves(curves: dict, path, xlabel: str, title: str | None = None):
    """Capital choice against a parameter, one line per entrepreneur, kinks dashed."""
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for (label, sweep), color, style in zip(curves.items(), ["tab:blue", "tab:red", "tab:green"], ["-", ":", "--"]):
        ax.plot(sweep.grid, sweep.k1, color=color, linestyle=style, label=label)
        for k in sweep.kinks:
            ax.axvline(k, color=color, linestyle="--", linewidth=0.8)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("k1")
    ax.legend(fontsize=8)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    _save(fig, path)
