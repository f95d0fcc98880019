"""Convergence figures rendered next to the CSV/JSON results."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "figure.figsize": (6.0, 3.8),
    "figure.dpi": 100,
    "font.size": 9,
    "axes.grid": True,
    "grid.color": "#B3B3B3",
    "grid.linestyle": "--",
    "grid.linewidth": 0.5,
    "lines.linewidth": 1.2,
    "lines.markersize": 3.0,
    "legend.fontsize": 8,
    "savefig.bbox": "tight",
}

COLORS = ["#0253AD", "#B0011B", "#009441", "#FF7300", "#710095"]


def plot_tables(path, tables, title: str = "", reference=None, ylabel: str = "value", logy: bool = False) -> None:
    """One line per table (midpoints) with a band from lo to hi.

    ``tables`` are dicts with keys label, n, lo, hi (lists); ``reference`` is
    an optional (label, lo, hi) drawn as a horizontal band.
    """
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for k, t in enumerate(tables):
            if not t["n"]:
                continue
            c = COLORS[k % len(COLORS)]
            mid = [0.5 * (a + b) for a, b in zip(t["lo"], t["hi"])]
            if logy:
                mid = [max(v, 1e-300) for v in mid]
            ax.plot(t["n"], mid, "o-", color=c, label=t["label"])
            if any(b - a > 0 for a, b in zip(t["lo"], t["hi"])):
                ax.fill_between(t["n"], t["lo"], t["hi"], color=c, alpha=0.2, linewidth=0)
        if reference is not None:
            label, lo, hi = reference
            ax.axhspan(lo, hi, color="#737373", alpha=0.3)
            ax.axhline(0.5 * (lo + hi), color="#737373", linestyle=":", label=label)
        if logy:
            ax.set_yscale("log")
        ax.set_xlabel("n")
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        ax.legend(loc="best")
        fig.savefig(path, metadata={"Software": None})
        plt.close(fig)


def plot_series(path, series_list, **kwargs) -> None:
    """plot_tables for :class:`ConvergenceSeries` objects."""
    tables = [{"label": s.estimator, "n": s.ns, "lo": [e.value.lo for e in s.entries],
               "hi": [e.value.hi for e in s.entries]} for s in series_list]
    plot_tables(path, tables, **kwargs)
