"""SVG figures built from the result tables alone.

Uses the object-oriented matplotlib API so nothing depends on pyplot state
or an interactive backend.
"""
from __future__ import annotations

import math
from pathlib import Path

import numpy as np
from matplotlib import rc_context
from matplotlib.backends.backend_svg import FigureCanvasSVG
from matplotlib.figure import Figure

from .evaluation import ecdf

SVG_META = {"Date": None}
# fixed salt so element ids, and therefore file bytes, are reproducible
SVG_RC = {"svg.hashsalt": "s2oct"}
METHOD_STYLE = {
    "s2oct": dict(color="tab:blue", label="semi-supervised"),
    "labeled_only": dict(color="tab:orange", label="labeled only"),
}


def _save(fig: Figure, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    FigureCanvasSVG(fig)
    with rc_context(SVG_RC):
        fig.savefig(path, format="svg", metadata=SVG_META)
    return path


def _float(v):
    try:
        return float(v)
    except (TypeError, ValueError):
        return math.nan


def plot_ecdf(results: list[dict], limit: float, path, title: str = "") -> Path:
    """Run-time ECDF, one step curve per method."""
    fig = Figure(figsize=(5.0, 3.5))
    ax = fig.add_subplot()
    methods = sorted({r["method"] for r in results})
    for method in methods:
        rows = [r for r in results if r["method"] == method]
        times = [
            _float(r.get("runtime_s")) if r.get("status") == "Optimal" else math.inf
            for r in rows
        ]
        prof = ecdf(times, limit)
        xs, ys = prof.steps()
        xs = np.concatenate([[0.0], xs, [limit]])
        ys = np.concatenate([[0.0], ys, [ys[-1] if ys.size else 0.0]])
        style = METHOD_STYLE.get(method, dict(label=method))
        ax.step(xs, ys, where="post", **style)
    ax.set_xlabel("run time [s]")
    ax.set_ylabel("fraction solved")
    ax.set_ylim(0.0, 1.02)
    ax.set_xlim(0.0, limit)
    if methods:
        ax.legend(loc="lower right")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    return _save(fig, path)


def plot_diff_boxes(diffs: list[dict], metrics: tuple[str, ...], path, title: str = "") -> Path:
    """Boxplots of paired differences.

    Rows are metric x slice (full data, unlabeled only). Columns are all
    instances and the instances where both methods terminated. Whiskers
    extend to 1.5 IQR.
    """
    panels = [(k, sl) for k in metrics for sl in ("full", "unlabeled")]
    fig = Figure(figsize=(8.0, 2.0 * len(panels)))
    axes = fig.subplots(len(panels), 2, squeeze=False)
    for r, (k, sl) in enumerate(panels):
        for c, subset in enumerate(("all", "both terminated")):
            ax = axes[r][c]
            rows = diffs if c == 0 else [d for d in diffs if str(d.get("both_terminated")) in ("1", "True")]
            vals = np.array([_float(d.get(f"d{k}_{sl}")) for d in rows])
            vals = vals[~np.isnan(vals)]
            ax.axvline(0.0, color="0.6", lw=0.8, ls="--")
            if vals.size:
                ax.boxplot(vals, orientation="horizontal", whis=1.5, widths=0.5)
            else:
                ax.text(0.5, 0.5, "no data", ha="center", va="center", transform=ax.transAxes)
            ax.set_yticks([])
            ax.set_title(f"{k} diff, {sl} ({subset}, n={vals.size})", fontsize=9)
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    return _save(fig, path)


def plot_all(results: list[dict], diffs: list[dict], limit: float, out_dir) -> list[Path]:
    """Write the ECDF and the two boxplot figures for every design."""
    out_dir = Path(out_dir)
    written = []
    designs = sorted({r["design"] for r in results})
    for design in designs:
        res = [r for r in results if r["design"] == design]
        dif = [d for d in diffs if d["design"] == design]
        written.append(plot_ecdf(res, limit, out_dir / f"ecdf_{design}.svg", title=design))
        written.append(plot_diff_boxes(dif, ("AC", "MCC"), out_dir / f"diffs_AC_MCC_{design}.svg", title=design))
        written.append(plot_diff_boxes(dif, ("PR", "RE"), out_dir / f"diffs_PR_RE_{design}.svg", title=design))
    return written
