"""SVG figures for the CLI reports (matplotlib, deterministic output)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .stability import STABLE, UNSTABLE, MassCurve  # noqa: E402

# fixed ids and no timestamp, so identical data give identical files
_RC = {"svg.hashsalt": "pointnls", "svg.fonttype": "path", "figure.dpi": 100}
_META = {"Date": None, "Creator": None}


def _save(fig, path):
    fig.savefig(path, format="svg", metadata=_META)
    plt.close(fig)


def plot_mass_curve(curve: MassCurve, path) -> None:
    """Mass against omega (log x), stable and unstable points marked apart."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        w = curve.omegas
        ok = np.isfinite(curve.mass)
        ax.plot(w[ok], curve.mass[ok], color="0.6", lw=1.0, zorder=1)
        cls = np.array(curve.classification)
        styles = {STABLE: ("o", "tab:blue"), UNSTABLE: ("x", "tab:red")}
        for name in sorted(set(cls[ok])):
            marker, color = styles.get(name, ("s", "0.3"))
            sel = ok & (cls == name)
            ax.scatter(w[sel], curve.mass[sel], marker=marker, color=color, label=name, zorder=2)
        for a, b in curve.sign_changes():
            ax.axvspan(a, b, color="0.9", zorder=0)
        ax.set_xscale("log")
        ax.set_xlabel(r"$\omega$")
        ax.set_ylabel(r"$\|\phi_\omega\|_{L^2}^2$")
        ax.set_title(f"alpha = {curve.alpha:g}, p = {curve.p:g}")
        ax.legend(frameon=False)
        fig.tight_layout()
        _save(fig, path)


def plot_profile(r, columns: dict, path, title: str = "") -> None:
    """Radial profiles on a log-r axis."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        for name, v in columns.items():
            ax.plot(r, v, lw=1.2, label=name)
        ax.set_xscale("log")
        ax.set_xlabel("r")
        ax.set_title(title)
        ax.legend(frameon=False)
        fig.tight_layout()
        _save(fig, path)
