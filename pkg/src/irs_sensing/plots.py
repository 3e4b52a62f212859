"""Figure rendering for experiment results.

Renders a single summary figure per run next to the CSV: CRB (and MSE when
present) in dB against the sweep axis, one line per scheme; convergence runs
plot the per-iteration CRB trace.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

from .runner import ResultRow  # noqa: E402


def _db(value: float) -> float:
    return 10.0 * np.log10(value) if value > 0 and np.isfinite(value) else np.nan


def render_results(rows: list[ResultRow], path: str | Path) -> Path:
    """Write a PNG summarizing the result rows; returns the path written."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    schemes = sorted({r.scheme for r in rows})
    axis = rows[0].axis if rows else "axis"
    for scheme in schemes:
        sub = [r for r in rows if r.scheme == scheme]
        xs = [r.axis_value for r in sub]
        ax.plot(xs, [_db(r.crb) for r in sub], marker="o",
                label=f"{scheme} CRB")
        if any(r.mse is not None for r in sub):
            ax.plot(xs, [_db(r.mse) if r.mse is not None else np.nan
                         for r in sub],
                    marker="x", linestyle="--", label=f"{scheme} MSE")
    ax.set_xlabel(axis)
    ax.set_ylabel("dB")
    ax.grid(True, alpha=0.4)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
