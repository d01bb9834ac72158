"""Standalone SVG figures for heatmaps, confidence curves and embeddings.

Text is kept as SVG text (not paths) and the figure date and element ids are
pinned, so identical tables render to identical documents.
"""

import io
import logging
from typing import Optional

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402
import seaborn as sns  # noqa: E402
from matplotlib.figure import Figure  # noqa: E402

from latentlens.errors import LatentLensError  # noqa: E402

logger = logging.getLogger(__name__)

KINDS = ("heatmap", "curve", "scatter", "overlay")
OVERLAY_MARKERS = {"high": "o", "low": "X"}

STYLE = {
    "svg.fonttype": "none",
    "svg.hashsalt": "latentlens",
    "font.family": "sans-serif",
    "font.size": 10,
    "axes.titlesize": 12,
    "axes.spines.top": False,
    "axes.spines.right": False,
}


class EmitError(LatentLensError):
    """Raised for an empty table, a missing column or an unknown figure kind."""


def _require(table: pd.DataFrame, columns: list, kind: str) -> None:
    missing = [c for c in columns if c not in table.columns]
    if missing:
        raise EmitError(f"{kind} table is missing columns {missing}")


def _heatmap(table: pd.DataFrame, title: Optional[str]) -> Figure:
    _require(table, ["train_level", "test_level", "accuracy"], "heatmap")
    grid = table.pivot(index="train_level", columns="test_level", values="accuracy").sort_index().sort_index(axis=1)
    size = max(4.0, 0.7 * len(grid) + 2.0)
    fig, ax = plt.subplots(figsize=(size + 1.0, size))
    sns.heatmap(
        grid,
        ax=ax,
        annot=True,
        fmt=".3f",
        vmin=0.0,
        vmax=1.0,
        cmap="viridis",
        square=True,
        linewidths=0.5,
        annot_kws={"fontsize": 7 if len(grid) > 6 else 9},
        cbar_kws={"label": "accuracy"},
    )
    ax.set_xlabel("test level")
    ax.set_ylabel("train level")
    ax.set_title(title or "Cross-level accuracy")
    return fig


def _curve(table: pd.DataFrame, title: Optional[str]) -> Figure:
    _require(table, ["mean_confidence", "accuracy", "count"], "curve")
    fig, ax = plt.subplots(figsize=(6, 4.5))
    sizes = 600.0 * table["count"] / table["count"].max()
    ax.plot(table["mean_confidence"], table["accuracy"], color="0.6", linewidth=1, zorder=1)
    ax.scatter(table["mean_confidence"], table["accuracy"], s=sizes, alpha=0.7, zorder=2)
    ax.set_xlabel("predicted confidence")
    ax.set_ylabel("empirical accuracy")
    ax.set_ylim(0.0, 1.05)
    ax.grid(True, alpha=0.2)
    ax.set_title(title or "Accuracy vs predicted confidence")
    return fig


def _scatter(table: pd.DataFrame, title: Optional[str]) -> Figure:
    _require(table, ["e0", "e1", "label"], "scatter")
    fig, ax = plt.subplots(figsize=(6, 5))
    labels = sorted(table["label"].unique())
    sns.scatterplot(
        data=table.assign(label=table["label"].astype(str)),
        x="e0",
        y="e1",
        hue="label",
        hue_order=[str(label) for label in labels],
        palette="tab10" if len(labels) <= 10 else "husl",
        s=8,
        linewidth=0,
        ax=ax,
    )
    ax.legend(title="label", loc="best", markerscale=2)
    ax.set_xlabel("component 1")
    ax.set_ylabel("component 2")
    ax.set_title(title or "Embedding")
    return fig


def _overlay(table: pd.DataFrame, title: Optional[str]) -> Figure:
    _require(table, ["e0", "e1", "label", "set"], "overlay")
    fig, ax = plt.subplots(figsize=(6, 5))
    labels = sorted(table["label"].unique())
    sns.scatterplot(
        data=table.assign(label=table["label"].astype(str)),
        x="e0",
        y="e1",
        hue="label",
        hue_order=[str(label) for label in labels],
        style="set",
        style_order=list(OVERLAY_MARKERS),
        markers=OVERLAY_MARKERS,
        size="set",
        size_order=list(OVERLAY_MARKERS),
        sizes={"high": 8, "low": 28},
        palette="tab10" if len(labels) <= 10 else "husl",
        linewidth=0,
        alpha=0.7,
        ax=ax,
    )
    ax.legend(loc="best", markerscale=1.5)
    ax.set_xlabel("component 1")
    ax.set_ylabel("component 2")
    ax.set_title(title or "Low-confidence records on the high-confidence basis")
    return fig


def build_figure(kind: str, table: pd.DataFrame, title: Optional[str] = None) -> Figure:
    """Draw ``table`` as a matplotlib figure of the given kind.

    Raises:
        EmitError: If the kind is unknown, the table is empty or lacks a column.
    """
    if kind not in KINDS:
        raise EmitError(f"Unknown figure kind '{kind}', expected one of {KINDS}")
    if table is None or table.empty:
        raise EmitError(f"Cannot render an empty {kind} table")
    with plt.rc_context(STYLE):
        builder = {"heatmap": _heatmap, "curve": _curve, "scatter": _scatter, "overlay": _overlay}[kind]
        fig = builder(table, title)
        fig.tight_layout()
    return fig


def emit_svg(kind: str, table: pd.DataFrame, title: Optional[str] = None) -> str:
    """Render ``table`` to a standalone SVG document.

    Args:
        kind: ``"heatmap"`` (long table with train_level/test_level/accuracy),
            ``"curve"`` (mean_confidence/accuracy/count), ``"scatter"`` (e0/e1/label)
            or ``"overlay"`` (e0/e1/label plus set, high or low).
        table: Data to draw.
        title: Optional figure title.

    Returns:
        The SVG text.
    """
    fig = build_figure(kind, table, title)
    buffer = io.StringIO()
    with plt.rc_context(STYLE):
        fig.savefig(buffer, format="svg", metadata={"Date": None})
    plt.close(fig)
    logger.debug(f"Rendered {kind} figure ({len(table)} rows)")
    return buffer.getvalue()
