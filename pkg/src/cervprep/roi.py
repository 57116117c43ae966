"""Cervix ROI: cluster choice, largest connected component, crop box."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .imagecore import BBox, as_mask

_STRUCTURE = {
    4: ndimage.generate_binary_structure(2, 1),
    8: ndimage.generate_binary_structure(2, 2),
}
TIE_EPS = 1e-9


class DegenerateClusteringError(ValueError):
    """Clustering produced no usable cervix cluster."""


@dataclass(frozen=True)
class ComponentLabeling:
    """``labels`` holds ids 1..n (0 is background); ``sizes[i - 1]`` is the size of id ``i``."""

    labels: np.ndarray
    sizes: np.ndarray

    @property
    def count(self) -> int:
        return int(self.sizes.size)


@dataclass(frozen=True)
class ClusterScore:
    index: int
    size: int
    spatial: float
    mean_a: float
    mean_b: float

    def as_dict(self) -> dict:
        return {
            "cluster": self.index,
            "size": self.size,
            "spatial_score": self.spatial,
            "mean_a": self.mean_a,
            "mean_b": self.mean_b,
        }


@dataclass
class RoiResult:
    cluster_index: int
    roi_mask: np.ndarray
    bbox: BBox
    tight_bbox: BBox
    scores: list[ClusterScore] = field(default_factory=list)
    component_sizes: list[int] = field(default_factory=list)

    @property
    def component_count(self) -> int:
        return len(self.component_sizes)


def connected_components(mask, connectivity: int = 8) -> ComponentLabeling:
    """Label connected true pixels; ids follow row-major order of each component's first pixel."""
    if connectivity not in _STRUCTURE:
        raise ValueError(f"connectivity must be 4 or 8, got {connectivity}")
    m = as_mask(mask)
    raw, n = ndimage.label(m, structure=_STRUCTURE[connectivity])
    if n == 0:
        return ComponentLabeling(np.zeros(m.shape, dtype=np.int32), np.zeros(0, dtype=np.int64))
    flat = raw.ravel()
    ids, first = np.unique(flat, return_index=True)
    keep = ids > 0
    ids, first = ids[keep], first[keep]
    remap = np.zeros(n + 1, dtype=np.int32)
    remap[ids[np.argsort(first, kind="stable")]] = np.arange(1, n + 1, dtype=np.int32)
    labels = remap[raw]
    sizes = np.bincount(labels.ravel(), minlength=n + 1)[1:].astype(np.int64)
    return ComponentLabeling(labels, sizes)


def largest_component(labeling: ComponentLabeling) -> np.ndarray:
    if labeling.count == 0:
        raise ValueError("no components to choose from")
    # argmax returns the first maximum, i.e. the lowest (earliest row-major) id
    best = int(np.argmax(labeling.sizes)) + 1
    return labeling.labels == best


def bbox_with_margin(mask, margin: int = 0) -> BBox:
    m = as_mask(mask)
    if not m.any():
        raise ValueError("cannot take the bounding box of an empty mask")
    if margin < 0:
        raise ValueError("margin must be non-negative")
    h, w = m.shape
    rows = np.flatnonzero(m.any(axis=1))
    cols = np.flatnonzero(m.any(axis=0))
    return BBox(
        max(0, int(cols[0]) - margin),
        max(0, int(rows[0]) - margin),
        min(w, int(cols[-1]) + 1 + margin),
        min(h, int(rows[-1]) + 1 + margin),
    )


def cluster_scores(assignments, k: int, lab, width: int, height: int) -> list[ClusterScore]:
    """Per-cluster centrality and mean chroma; empty clusters are omitted."""
    assign = np.asarray(assignments).ravel()
    if assign.size != width * height:
        raise ValueError(f"{assign.size} assignments for a {width}x{height} image")
    ys, xs = np.divmod(np.arange(assign.size), width)
    cx, cy = (width - 1) / 2.0, (height - 1) / 2.0
    d2 = (xs - cx) ** 2 + (ys - cy) ** 2
    norm = (width / 2.0) ** 2 + (height / 2.0) ** 2
    a_flat, b_flat = lab.a.ravel(), lab.b.ravel()
    counts = np.bincount(assign, minlength=k)
    spatial = np.bincount(assign, weights=d2, minlength=k)
    sum_a = np.bincount(assign, weights=a_flat, minlength=k)
    sum_b = np.bincount(assign, weights=b_flat, minlength=k)
    out = []
    for j in range(k):
        if counts[j] == 0:
            continue
        n = float(counts[j])
        out.append(ClusterScore(j, int(counts[j]), spatial[j] / n / norm, sum_a[j] / n, sum_b[j] / n))
    return out


def select_cervix_cluster(model, lab, width: int, height: int) -> tuple[int, list[ClusterScore]]:
    """Pick the most central cluster, breaking near-ties by the larger mean ``a`` (pinker)."""
    scores = cluster_scores(model.assignments, model.k, lab, width, height)
    if not scores:
        raise DegenerateClusteringError("degenerate clustering: every cluster is empty")
    best = scores[0]
    for s in scores[1:]:
        if s.spatial < best.spatial - TIE_EPS:
            best = s
        elif abs(s.spatial - best.spatial) <= TIE_EPS and s.mean_a > best.mean_a:
            best = s
    return best.index, scores


def extract_roi(model, lab, width: int, height: int, connectivity: int = 8, margin: int = 10) -> RoiResult:
    """Cluster selection, largest component of that cluster, and the crop box."""
    nonempty = int(np.count_nonzero(np.bincount(np.asarray(model.assignments).ravel(), minlength=model.k)))
    if nonempty < 2:
        raise DegenerateClusteringError(
            f"degenerate clustering: {nonempty} non-empty cluster(s) out of k={model.k}"
        )
    index, scores = select_cervix_cluster(model, lab, width, height)
    member = (np.asarray(model.assignments) == index).reshape(height, width)
    labeling = connected_components(member, connectivity)
    roi_mask = largest_component(labeling)
    return RoiResult(
        cluster_index=index,
        roi_mask=roi_mask,
        bbox=bbox_with_margin(roi_mask, margin),
        tight_bbox=bbox_with_margin(roi_mask, 0),
        scores=scores,
        component_sizes=[int(s) for s in labeling.sizes],
    )
