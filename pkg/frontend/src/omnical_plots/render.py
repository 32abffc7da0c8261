"""Figure rendering: one trend figure per sweep metric, plus per-interval
swap-regret heatmaps from metrics tables.

Rendering is a pure function of the input file: fixed backend (Agg), fixed
dpi, fixed metadata, deterministic filenames, so reruns are byte-identical.
Undefined table cells become gaps, never crashes.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .tables import METRICS_SCHEMA, SWEEP_SCHEMA, interval_span, read_table

_SAVE_KW = {"dpi": 110, "metadata": {"Software": "omnical-plots"}}


def fit_loglog_slope(horizons, values) -> float | None:
    """Least squares slope of log(value) against log(horizon).

    Undefined and nonpositive values are excluded; at least two points are
    needed for a slope.
    """
    xs, ys = [], []
    for t, v in zip(horizons, values):
        if v is not None and v > 0.0:
            xs.append(math.log(float(t)))
            ys.append(math.log(float(v)))
    if len(xs) < 2:
        return None
    return float(np.polyfit(np.array(xs), np.array(ys), 1)[0])


def render_sweep(rows, out_dir: Path) -> dict:
    metrics = []
    for r in rows:
        if r["metric"] not in metrics:
            metrics.append(r["metric"])
    written = {}
    for metric in metrics:
        sub = [r for r in rows if r["metric"] == metric]
        horizons = [r["horizon"] for r in sub]
        medians = [r["median"] for r in sub]
        maxima = [r["max"] for r in sub]
        slope = fit_loglog_slope(horizons, medians)

        fig, ax = plt.subplots(figsize=(5.0, 3.6))
        ts = np.array(horizons, dtype=float)
        med_arr = np.array([np.nan if v is None else v for v in medians], dtype=float)
        max_arr = np.array([np.nan if v is None else v for v in maxima], dtype=float)
        ax.plot(ts, med_arr, "o-", label="median over seeds")
        ax.plot(ts, max_arr, "s--", alpha=0.6, label="max over seeds")
        anchor = next((v for v in medians if v is not None and v > 0), None)
        if anchor is not None:
            t0 = ts[next(i for i, v in enumerate(medians) if v is not None and v > 0)]
            ref = np.sqrt(ts) * (anchor / math.sqrt(t0))
            ax.plot(ts, ref, ":", color="gray", label="sqrt(T) reference")
            ref23 = ts ** (2.0 / 3.0) * (anchor / t0 ** (2.0 / 3.0))
            ax.plot(ts, ref23, "-.", color="gray", alpha=0.7, label="T^(2/3) reference")
        if slope is not None:
            ax.annotate(
                f"log-log slope = {slope:.2f}",
                xy=(0.05, 0.92),
                xycoords="axes fraction",
                fontsize=9,
            )
        ax.set_xscale("log")
        if not np.all(np.isnan(med_arr)) and np.nanmin(med_arr) > 0:
            ax.set_yscale("log")
        ax.set_xlabel("horizon T")
        ax.set_ylabel(metric)
        ax.legend(fontsize=7, loc="lower right")
        fig.tight_layout()
        path = out_dir / f"trend_{metric}.png"
        fig.savefig(path, **_SAVE_KW)
        plt.close(fig)
        written[str(path)] = slope
    return written


def render_interval_heatmap(rows, out_dir: Path, metric: str = "swap_regret") -> dict:
    agents = []
    for r in rows:
        if r["agent"] not in agents:
            agents.append(r["agent"])
    written = {}
    for agent in agents:
        cells = []
        for r in rows:
            if r["agent"] != agent or r["metric"] != metric:
                continue
            span = interval_span(r["subseq"])
            if span is None:
                continue
            cells.append((span[0], span[1], r["value"]))
        if not cells:
            continue
        t_max = max(e for _, e, _ in cells)
        grid = np.full((t_max, t_max), np.nan)
        for s, e, v in cells:
            grid[e - 1, s - 1] = np.nan if v is None else v
        fig, ax = plt.subplots(figsize=(4.6, 4.0))
        im = ax.imshow(grid, origin="lower", aspect="auto", cmap="viridis")
        ax.set_xlabel("interval start")
        ax.set_ylabel("interval end")
        ax.set_title(f"{metric} per interval: {agent}", fontsize=9)
        fig.colorbar(im, ax=ax, shrink=0.85)
        fig.tight_layout()
        path = out_dir / f"heatmap_{agent}_{metric}.png"
        fig.savefig(path, **_SAVE_KW)
        plt.close(fig)
        written[str(path)] = len(cells)
    return written


def render_table(table_path, out_dir) -> dict:
    """Render every figure a table supports; returns {path: slope-or-count}."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    schema, rows = read_table(table_path)
    if schema == SWEEP_SCHEMA:
        return render_sweep(rows, out)
    if schema == METRICS_SCHEMA:
        return render_interval_heatmap(rows, out)
    raise AssertionError(schema)
