"""Matplotlib figures written next to the CSV/JSON reports.

Only imported when figures are requested; the Agg backend is forced so the
CLI works headless.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

FIGSIZE = (6.4, 4.0)


def _finish(fig, ax, path):
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_mixing(profile, path, title=None):
    """TV, d-bar and separation curves against t with the 1/4 threshold."""
    fig, ax = plt.subplots(figsize=FIGSIZE)
    t = np.arange(len(profile.tv_curve))
    ax.plot(t, profile.tv_curve, marker=".", label="max-row TV to π")
    ax.plot(t, profile.d_bar_curve, marker=".", label="d̄(t)")
    ax.plot(t, np.clip(profile.separation_curve, 0, 1), marker=".", label="s(t)")
    ax.axhline(0.25, color="k", lw=0.8, ls="--")
    if profile.t_star is not None:
        ax.axvline(profile.t_star, color="grey", lw=0.8, ls=":", label=f"t* = {profile.t_star}")
    ax.set_xlabel("t")
    ax.set_ylabel("distance")
    ax.set_ylim(0, 1.05)
    ax.legend()
    if title:
        ax.set_title(title)
    return _finish(fig, ax, path)


def plot_visits(abs_diff, bound, path, title=None):
    """Per-vertex |X - M| as bars with the per-vertex bound as markers."""
    fig, ax = plt.subplots(figsize=FIGSIZE)
    v = np.arange(len(abs_diff))
    ax.bar(v, abs_diff, color="tab:blue", label="|X - M|")
    if bound is not None:
        ax.plot(v, bound, "r_", ms=12, mew=2, label="bound")
        ax.set_yscale("log")
    ax.set_xlabel("vertex")
    ax.set_ylabel("visit discrepancy")
    ax.legend()
    if title:
        ax.set_title(title)
    return _finish(fig, ax, path)


def plot_first_visits(first_visit, path, bound=None, title=None):
    fig, ax = plt.subplots(figsize=FIGSIZE)
    fv = np.asarray(first_visit)
    fv = fv[fv >= 0]
    ax.hist(fv, bins=max(1, min(50, int(fv.max()) + 1 if len(fv) else 1)), color="tab:green")
    if bound is not None:
        ax.axvline(bound, color="r", ls="--", label=f"bound {bound:.4g}")
        ax.legend()
    ax.set_xlabel("first visit time")
    ax.set_ylabel("vertices")
    if title:
        ax.set_title(title)
    return _finish(fig, ax, path)


def plot_sweep(rows, axis, path, title=None):
    """Measured quantity and bound against the sweep axis (log-log)."""
    good = [r for r in rows if not r.get("error")]
    fig, ax = plt.subplots(figsize=FIGSIZE)
    x = [r["value"] for r in good]
    ax.plot(x, [r["measured"] for r in good], "o-", label="measured")
    ax.plot(x, [r["bound"] for r in good], "s--", label="bound")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel(axis)
    ax.legend()
    if title:
        ax.set_title(title)
    return _finish(fig, ax, path)
