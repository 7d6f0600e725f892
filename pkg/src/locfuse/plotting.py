"""Figures for experiment reports.

Uses the non-interactive Agg backend and strips PNG metadata, so the same
report renders to byte-identical files.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 10,
    "axes.labelsize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "figure.dpi": 100,
    "savefig.dpi": 150,
}

# classification orange, regression blue; per-technology CDF line styles
METHOD_COLORS = {"classify": "tab:orange", "regress": "tab:blue"}
TECH_STYLES = {
    "5g": dict(color="tab:red", linestyle=":"),
    "wifi": dict(color="tab:blue", linestyle="--"),
    "fusion": dict(color="tab:green", linestyle="-"),
}
TECH_NAMES = {"5g": "5G", "wifi": "WiFi", "fusion": "Fusion"}


def _save(fig, path):
    fig.savefig(path, format="png", metadata={"Software": None})
    plt.close(fig)


def accuracy_bars(rows, path, figsize=(5.0, 3.2)):
    """Grouped bars of mean accuracy per technology and method.

    ``rows`` are report summary rows (dicts with technology, method,
    mean_accuracy, std_accuracy).
    """
    techs = list(dict.fromkeys(r["technology"] for r in rows))
    methods = list(dict.fromkeys(r["method"] for r in rows))
    lookup = {(r["technology"], r["method"]): r for r in rows}
    x = np.arange(len(techs))
    width = 0.8 / max(1, len(methods))
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=figsize)
        for k, m in enumerate(methods):
            means = [100 * lookup[(t, m)]["mean_accuracy"] for t in techs]
            errs = [100 * lookup[(t, m)]["std_accuracy"] for t in techs]
            ax.bar(x + (k - (len(methods) - 1) / 2) * width, means, width, yerr=errs, capsize=3,
                   color=METHOD_COLORS.get(m), label=m)
        ax.set_xticks(x, [TECH_NAMES.get(t, t) for t in techs])
        ax.set_ylabel("Accuracy (%)")
        ax.set_ylim(0, 100)
        ax.legend(loc="lower right", frameon=False)
        fig.tight_layout()
        _save(fig, path)


def error_cdfs(errors, path, requirement_m=None, figsize=(5.0, 3.2)):
    """Empirical CDF of horizontal error per technology.

    ``errors`` maps technology value to a sorted error array.  An optional
    vertical line marks an accuracy requirement.
    """
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=figsize)
        for tech, e in errors.items():
            e = np.sort(np.asarray(e, dtype=float))
            frac = np.arange(1, e.size + 1) / e.size
            ax.step(e, frac, where="post", label=TECH_NAMES.get(tech, tech), **TECH_STYLES.get(tech, {}))
        if requirement_m is not None:
            ax.axvline(requirement_m, color="0.5", linewidth=0.8)
        ax.axhline(0.8, color="0.8", linewidth=0.8)
        ax.set_xlabel("Horizontal error (m)")
        ax.set_ylabel("CDF")
        ax.set_ylim(0, 1.0)
        ax.set_xlim(left=0)
        ax.legend(loc="lower right", frameon=False)
        fig.tight_layout()
        _save(fig, path)
