"""Figures and aggregate tables from sweep results.

Takes the delimited output of a sweep and renders, per grid coordinate
that actually varies, the mean trend of the main recovery metrics, with
one PNG per (metric, coordinate) pair plus an aggregated summary CSV next
to them.  This is the only module that touches matplotlib; the numeric
core stays plot-free.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import pandas as pd

GRID_COORDS = ["n", "k", "d", "T", "sigma", "lambda_value"]
METRICS = ["f1", "param_error", "exact_structure", "kkt_residual_max"]


def load_results(csv_path) -> pd.DataFrame:
    df = pd.read_csv(csv_path)
    if "error" in df.columns:
        df = df[df["error"].isna() | (df["error"] == "")]
    for col in GRID_COORDS + METRICS:
        if col in df.columns:
            df[col] = pd.to_numeric(df[col], errors="coerce")
    return df


def summarize(df: pd.DataFrame) -> pd.DataFrame:
    """Mean/std/count of each metric per grid point."""
    coords = [c for c in GRID_COORDS if c in df.columns]
    metrics = [m for m in METRICS if m in df.columns]
    grouped = df.groupby(coords, dropna=False)[metrics]
    out = grouped.agg(["mean", "std", "count"])
    out.columns = ["_".join(col) for col in out.columns]
    return out.reset_index()


def render_report(csv_path, outdir) -> list[Path]:
    """Write summary.csv and trend figures; returns the paths written."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    df = load_results(csv_path)
    if df.empty:
        raise ValueError(f"no usable rows in {csv_path}")

    written = []
    summary = summarize(df)
    summary_path = outdir / "summary.csv"
    summary.to_csv(summary_path, index=False)
    written.append(summary_path)

    varying = [c for c in GRID_COORDS
               if c in df.columns and df[c].nunique(dropna=True) > 1]
    metrics = [m for m in METRICS if m in df.columns]
    for coord in varying:
        for metric in metrics:
            stats = df.groupby(coord)[metric].agg(["mean", "std"]).reset_index()
            fig, ax = plt.subplots(figsize=(5.0, 3.4))
            ax.errorbar(stats[coord], stats["mean"],
                        yerr=stats["std"].fillna(0.0),
                        marker="o", capsize=3)
            ax.set_xlabel(coord)
            ax.set_ylabel(f"mean {metric}")
            ax.grid(True, alpha=0.3)
            if coord in ("T", "n") and (stats[coord] > 0).all():
                ax.set_xscale("log")
            fig.tight_layout()
            path = outdir / f"{metric}_vs_{coord}.png"
            fig.savefig(path, dpi=150)
            plt.close(fig)
            written.append(path)
    return written
