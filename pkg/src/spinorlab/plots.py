"""Figures rendered by ``spinorlab report`` next to the CSV tables."""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "figure.figsize": (5.0, 3.4),
    "figure.dpi": 120,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "font.size": 9,
    "legend.frameon": False,
}


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path)
    plt.close(fig)
    return path


def _col(rows, key) -> list[float]:
    return [float(r[key]) for r in rows]


def plot_sweep(rows: Sequence[dict], bound: float, q_crit: float, extrapolated: float | None,
               path: Path) -> Path:
    """``lambda_q`` against ``q`` with the sphere ceiling and the extrapolated endpoint."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot(_col(rows, "q"), _col(rows, "lambda_q"), "o-", ms=3, label=r"$\lambda_q$")
        ax.axhline(bound, color="k", lw=0.8, ls="--", label="ceiling")
        if extrapolated is not None:
            ax.plot([q_crit], [extrapolated], "s", color="C3", label="extrapolated")
        ax.axvline(q_crit, color="0.6", lw=0.6)
        ax.set_xlabel("q")
        ax.set_ylabel(r"$\lambda_q$")
        ax.legend()
        return _save(fig, path)


def plot_sharp(rows: Sequence[dict], path: Path) -> Path:
    """Relative gap of the Killing quotient to the sphere value against box radius."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        radius = _col(rows, "radius")
        gap = [abs(float(r["ratio"]) - 1) for r in rows]
        ax.loglog(radius, gap, "o-", ms=3)
        ax.axhline(0.01, color="k", lw=0.8, ls="--")
        ax.set_xlabel("box radius")
        ax.set_ylabel("|value/bound - 1|")
        return _save(fig, path)


def plot_existence(rows: Sequence[dict], n: int, coeff: float, path: Path) -> Path:
    """``value/bound - 1`` against ``eps`` with the fitted leading power."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        eps = _col(rows, "eps")
        dev = [1 - float(r["ratio"]) for r in rows]
        ax.loglog(eps, dev, "o", ms=3, label="1 - value/bound")
        if coeff < 0:
            ax.loglog(eps, [-coeff * e ** (n - 1) for e in eps], "-", lw=0.8,
                      label=rf"$|c|\,\varepsilon^{{{n - 1}}}$")
        ax.set_xlabel(r"$\varepsilon$")
        ax.legend()
        return _save(fig, path)


def plot_sobolev(rows: Sequence[dict], path: Path) -> Path:
    """Histogram of the per-sample constant each grid size requires."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for N in sorted({int(r["N"]) for r in rows}):
            vals = [float(r["required_B"]) for r in rows if int(r["N"]) == N]
            ax.hist(vals, bins=30, histtype="step", label=f"N={N}")
        ax.set_xlabel("required B")
        ax.set_ylabel("samples")
        ax.legend()
        return _save(fig, path)
