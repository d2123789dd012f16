"""Render figure data (long-format ``x, series, value`` rows) to image files."""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

PRIOR_LABELS = {"uniform": "uniform", "kl": "p ~ I", "l": "p ~ L", "hat": "p ~ L exp(kappa)"}


def _series(rows):
    out = defaultdict(lambda: ([], []))
    for r in rows:
        xs, ys = out[r["series"]]
        xs.append(r["x"])
        ys.append(r["value"])
    return out


def plot_loss(rows, path, title=""):
    """Two panels: loss with signal in the first channel and in the last one."""
    s = _series(rows)
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.8), sharex=True)
    for ax, prefix, label in zip(axes, ("J1", "JK"), ("signal in channel 1", "signal in channel K")):
        for kind, name in PRIOR_LABELS.items():
            key = f"{prefix}_{kind}"
            if key in s:
                ax.plot(*s[key], label=name)
        ax.set_xlabel("theta (last K/2 channels)")
        ax.set_ylabel("performance loss")
        ax.set_title(label, fontsize=10)
        ax.grid(alpha=0.3)
    axes[0].legend(fontsize=8)
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def plot_ess(rows, path, title=""):
    """One panel per alternative: simulated points, corrected curve (dashed), SPRT (solid)."""
    s = _series(rows)
    idx = sorted({int(k[1:].split("_")[0]) for k in s})
    fig, axes = plt.subplots(1, len(idx), figsize=(4 * len(idx), 3.8))
    axes = [axes] if len(idx) == 1 else axes
    for ax, i in zip(axes, idx):
        if f"E{i}_approx" in s:
            ax.plot(*s[f"E{i}_approx"], "k--", lw=1, label="approximation")
        if f"E{i}_sprt" in s:
            ax.plot(*s[f"E{i}_sprt"], "k-", lw=1, label="SPRT")
        for test, marker in (("milrt", "o"), ("wglrt", "^")):
            if f"E{i}_{test}" in s:
                ax.plot(*s[f"E{i}_{test}"], marker, ls="none", mfc="none", label=test.upper())
        ax.set_xscale("log")
        ax.invert_xaxis()
        ax.set_xlabel("type-I error")
        ax.set_ylabel(f"E_{i}[T]")
        ax.grid(alpha=0.3)
    axes[0].legend(fontsize=8)
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)
