"""Matplotlib figures rendered next to the delimited output files."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def convergence_figure(path, sizes_by_order, errors_by_order, title="L2 convergence"):
    """Log-log error vs refinement with first/second-order reference slopes."""
    fig, ax = plt.subplots(figsize=(5.0, 3.8))
    ref_sizes = None
    for order, sizes in sorted(sizes_by_order.items()):
        errs = errors_by_order[order]
        ratio = np.asarray(sizes[0]) / np.asarray(sizes)
        ax.loglog(ratio, errs, "o-", label=f"order {order}")
        if ref_sizes is None:
            ref_sizes = (ratio, errs[0])
    if ref_sizes is not None:
        r, e0 = ref_sizes
        ax.loglog(r, e0 * r ** -1.0, "k--", lw=0.8, label="slope 1")
        ax.loglog(r, e0 * r ** -2.0, "k:", lw=0.8, label="slope 2")
    ax.set_xlabel("refinement  h_a0 / h_a")
    ax.set_ylabel("L2 error of h")
    ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, path)


def gauge_figure(path, times, depths, label="gauge"):
    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    ax.plot(times, depths, lw=1.0)
    ax.set_xlabel("t [s]")
    ax.set_ylabel("h [m]")
    ax.set_title(label)
    fig.tight_layout()
    _save(fig, path)


def summary_figure(path, summary):
    """Mass / energy / time-step history from a SummaryWriter dict."""
    fig, axes = plt.subplots(3, 1, figsize=(5.2, 6.4), sharex=True)
    t = summary["t"]
    m0 = summary["mass"][0] if summary["mass"].size else 1.0
    axes[0].plot(t, summary["mass"] / max(abs(m0), 1e-300) - 1.0, lw=1.0)
    axes[0].set_ylabel("relative mass drift")
    axes[1].plot(t, summary["energy"], lw=1.0)
    axes[1].set_ylabel("energy")
    axes[2].semilogy(t, summary["dt"], lw=1.0)
    axes[2].set_ylabel("dt [s]")
    axes[2].set_xlabel("t [s]")
    fig.tight_layout()
    _save(fig, path)


def profile_figure(path, z, u_analytic, u_layers_by_n, label="velocity profile"):
    fig, ax = plt.subplots(figsize=(4.2, 4.2))
    ax.plot(u_analytic, z, "k-", lw=1.0, label="analytic")
    for n, (zc, uc) in sorted(u_layers_by_n.items()):
        ax.plot(uc, zc, "o--", ms=3, lw=0.8, label=f"{n} layers")
    ax.set_xlabel("u [m/s]")
    ax.set_ylabel("z [m]")
    ax.set_title(label)
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, path)


def _save(fig, path):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=130)
    plt.close(fig)
