"""Matplotlib renderings for the report path (Agg backend, written straight to file)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.patches import Rectangle  # noqa: E402

# no timestamp / version chunks, so identical inputs give identical bytes
_PNG_METADATA = {"Software": None}


def _save(fig, path) -> None:
    fig.savefig(path, dpi=100, metadata=_PNG_METADATA)
    plt.close(fig)


def render_stages(raw, inpainted, roi_mask, bbox, path, title: str | None = None) -> None:
    """Raw image, highlight-free image, and detected ROI side by side."""
    fig, axes = plt.subplots(1, 3, figsize=(12, 4))
    overlay = inpainted.copy()
    overlay[~roi_mask] = (overlay[~roi_mask] * 0.3).astype(np.uint8)
    panels = (
        (raw, "raw"),
        (inpainted, "specular reflection removed"),
        (overlay, "ROI (largest component)"),
    )
    for ax, (img, label) in zip(axes, panels):
        ax.imshow(img, interpolation="nearest")
        ax.set_title(label, fontsize=10)
        ax.set_xticks([])
        ax.set_yticks([])
    axes[2].add_patch(
        Rectangle(
            (bbox.x0 - 0.5, bbox.y0 - 0.5),
            bbox.width,
            bbox.height,
            fill=False,
            edgecolor="yellow",
            linewidth=1.5,
        )
    )
    if title:
        fig.suptitle(title, fontsize=11)
    fig.tight_layout()
    _save(fig, path)


def render_batch_summary(rows: list[dict], path) -> None:
    """Per-image highlight area and ROI box area, as fractions of the frame."""
    names = [r["name"] for r in rows]
    spec = [r["specular_fraction"] for r in rows]
    roi = [r["bbox_fraction"] for r in rows]
    x = np.arange(len(rows))
    fig, ax = plt.subplots(figsize=(max(4.0, 0.5 * len(rows) + 2), 3.5))
    ax.bar(x - 0.2, spec, width=0.4, label="dilated specular mask")
    ax.bar(x + 0.2, roi, width=0.4, label="ROI bbox")
    ax.set_xticks(x)
    ax.set_xticklabels(names, rotation=60, ha="right", fontsize=7)
    ax.set_ylabel("fraction of image")
    ax.set_ylim(0, 1)
    ax.legend(fontsize=8, frameon=False)
    fig.tight_layout()
    _save(fig, path)
