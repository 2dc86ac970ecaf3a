"""Deterministic SVG figures for annealing traces."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_SVG_META = {"Date": None, "Creator": None}


def _save(fig, path):
    with matplotlib.rc_context({"svg.hashsalt": "divib", "svg.fonttype": "path"}):
        fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)


def info_curve(trace, path):
    """D_beta against I_beta, with effective cardinality underneath."""
    I = trace.column("I")
    D = trace.column("D")
    k = trace.column("eff_card")
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6, 6), sharex=True, gridspec_kw={"height_ratios": [3, 1]})
    ax1.plot(I, D, ".-", ms=2, lw=0.8)
    ax1.set_ylabel("D_beta (nats)")
    ax1.set_title("information curve")
    ax2.step(I, k, where="post", lw=0.8)
    ax2.set_xlabel("I_beta (nats)")
    ax2.set_ylabel("eff. card.")
    fig.tight_layout()
    _save(fig, path)


def residual_curves(trace, summary, path, floor=1e-18):
    I = trace.column("I")
    fig, ax = plt.subplots(figsize=(6, 4))
    for name in trace.group_names:
        r = np.maximum(trace.column(name), floor)
        line, = ax.semilogy(I, r, ".-", ms=2, lw=0.8, label=name)
        it = summary.get("I_at_threshold", {}).get(name)
        if it is not None:
            ax.axvline(it, color=line.get_color(), ls="--", lw=0.8)
    ax.axhline(1e-8, color="grey", lw=0.5)
    ax.set_xlabel("I_beta (nats)")
    ax.set_ylabel("divergence from symmetric channels (nats)")
    ax.legend()
    fig.tight_layout()
    _save(fig, path)
