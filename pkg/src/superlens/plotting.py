"""SVG figures: profile overlays and the |Upsilon_n| chart.

Output is deterministic: no timestamp metadata and a fixed id salt.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_SVG_META = {"Date": None, "Creator": None}


def _save(fig, path) -> None:
    with plt.rc_context({"svg.hashsalt": "superlens", "svg.fonttype": "none"}):
        fig.savefig(Path(path), format="svg", metadata=_SVG_META)
    plt.close(fig)


def plot_overlay(x, f_true, f_recon, path, title: str = "") -> None:
    """True profile (red, solid) against the reconstruction (blue, dashed)."""
    fig, ax = plt.subplots(figsize=(4.5, 3.0))
    if f_true is not None:
        ax.plot(x, f_true, "r-", lw=1.4, label="true")
    ax.plot(x, f_recon, "b--", lw=1.4, label="reconstruction")
    ax.set_xlabel("x")
    ax.set_ylabel("f(x)")
    ax.set_xlim(float(np.min(x)), float(np.max(x)))
    if title:
        ax.set_title(title, fontsize=9)
    ax.legend(fontsize=7, loc="upper right")
    fig.tight_layout()
    _save(fig, path)


def plot_upsilon(modes, values, labels, path) -> None:
    """``|Upsilon_n|`` on a log axis, one series per parameter set."""
    fig, ax = plt.subplots(figsize=(5.0, 3.5))
    markers = "osd^v<>"
    for i, (row, lab) in enumerate(zip(values, labels)):
        ax.semilogy(modes, row, marker=markers[i % len(markers)], ms=3, lw=1, label=lab)
    ax.set_xlabel("n")
    ax.set_ylabel("|Upsilon_n|")
    ax.legend(fontsize=7)
    fig.tight_layout()
    _save(fig, path)
