"""Self-contained SVG equity plots."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .metrics import EquityCurve  # noqa: E402


def plot_equity(curves: dict[str, EquityCurve], path: str | Path, title: str = "") -> None:
    """Overlay normalised equity curves; output is byte-stable for identical input."""
    with plt.rc_context({"svg.hashsalt": "mssddpg", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(10, 4.5))
        for name, e in curves.items():
            ax.plot(e.timestamps, e.normalized(), label=name, linewidth=1.0)
        ax.set_ylabel("net value")
        ax.set_title(title)
        ax.grid(True, alpha=0.3)
        ax.legend(loc="upper left", fontsize=8)
        fig.autofmt_xdate()
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
