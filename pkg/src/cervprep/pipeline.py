"""End-to-end preprocessing: highlight removal, ROI detection, crop, report."""

from __future__ import annotations

import csv
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .color import rgb_to_lab_image
from .imagecore import ImageFormatError, as_rgb8, crop, load_image, save_image, save_mask
from .inpaint import SolverConfig, inpaint_image
from .kmeans import ClusterModel, KmeansConfig, assign_all, kmeans
from .roi import DegenerateClusteringError, RoiResult, extract_roi
from .specular import SpecularConfig, detect_specular, dilate

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
IMAGE_SUFFIXES = (".png", ".ppm")
SUBSAMPLE_ABOVE = 512 * 512
SUBSAMPLE_SIZE = 65536
TIMING_KEY = "timing_s"

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_DEGENERATE = 4


class PipelineError(RuntimeError):
    """A stage failed; ``stage`` names it and ``exit_code`` is the CLI status to use."""

    def __init__(self, stage: str, message: str, exit_code: int = 1):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
        self.exit_code = exit_code


@dataclass(frozen=True)
class PipelineConfig:
    specular: SpecularConfig = field(default_factory=SpecularConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    kmeans: KmeansConfig = field(default_factory=KmeansConfig)
    connectivity: int = 8
    crop_margin: int = 10
    use_lightness: bool = False
    grayscale_inpaint: bool = False
    subsample: bool = True
    emit_intermediates: bool = False
    output_dir: str = "out"

    def __post_init__(self):
        if self.connectivity not in (4, 8):
            raise ValueError(f"connectivity must be 4 or 8, got {self.connectivity}")
        if self.crop_margin < 0:
            raise ValueError("crop margin must be non-negative")
        if self.kmeans.k < 2:
            raise ValueError("ROI extraction needs k >= 2")

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class PipelineResult:
    cropped: np.ndarray
    roi: RoiResult
    inpainted: np.ndarray
    report: dict
    specular_mask: np.ndarray
    dilated_mask: np.ndarray
    model: ClusterModel


def _cluster(features: np.ndarray, cfg: PipelineConfig) -> tuple[ClusterModel, dict]:
    n = features.shape[0]
    info = {"subsampled": False, "sample_size": n}
    if cfg.subsample and n > SUBSAMPLE_ABOVE:
        rng = np.random.default_rng(np.random.SeedSequence([cfg.kmeans.seed, 0x5AB5]))
        sample = np.sort(rng.choice(n, size=SUBSAMPLE_SIZE, replace=False))
        fit = kmeans(features[sample], cfg.kmeans)
        assign, d = assign_all(features, fit.means)
        model = ClusterModel(
            k=fit.k,
            means=fit.means,
            assignments=assign.astype(np.int64),
            iterations=fit.iterations,
            wcss=float(d.sum()),
            converged=fit.converged,
            history=fit.history,
        )
        info = {"subsampled": True, "sample_size": SUBSAMPLE_SIZE, "sample_wcss": fit.wcss}
        return model, info
    return kmeans(features, cfg.kmeans), info


def run_pipeline(image, cfg: PipelineConfig | None = None, source: str | None = None) -> PipelineResult:
    """Run every stage on one image and build its report."""
    cfg = cfg or PipelineConfig()
    image = as_rgb8(image)
    h, w, _ = image.shape
    timing: dict[str, float] = {}
    warnings: list[str] = []

    t0 = time.perf_counter()
    raw_mask = detect_specular(image, cfg.specular)
    mask = dilate(raw_mask, cfg.specular.se) if raw_mask.any() else raw_mask.copy()
    timing["specular"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    if mask.all():
        raise PipelineError("inpaint", "degenerate input: the specular mask covers the whole image", EXIT_DEGENERATE)
    try:
        inpainted, stats = inpaint_image(image, mask, cfg.solver, grayscale=cfg.grayscale_inpaint)
    except ValueError as exc:
        raise PipelineError("inpaint", str(exc)) from exc
    channels = ["luma"] if cfg.grayscale_inpaint else ["R", "G", "B"]
    for name, s in zip(channels, stats):
        if not s.converged:
            warnings.append(
                f"inpaint channel {name}: not converged after {s.iterations} iterations "
                f"(residual {s.final_residual:.3g} > tol {cfg.solver.tol:.3g})"
            )
    timing["inpaint"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    lab = rgb_to_lab_image(inpainted)
    features = lab.features(use_lightness=cfg.use_lightness)
    try:
        model, sample_info = _cluster(features, cfg)
    except ValueError as exc:
        raise PipelineError("kmeans", str(exc), EXIT_DEGENERATE) from exc
    if not model.converged:
        warnings.append(f"kmeans: assignment still changing at max_iters={cfg.kmeans.max_iters}")
    timing["kmeans"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    try:
        roi = extract_roi(model, lab, w, h, connectivity=cfg.connectivity, margin=cfg.crop_margin)
    except DegenerateClusteringError as exc:
        raise PipelineError("roi", str(exc), EXIT_DEGENERATE) from exc
    cropped = crop(inpainted, roi.bbox)
    timing["roi"] = time.perf_counter() - t0

    for msg in warnings:
        log.warning("%s: %s", source or "<image>", msg)

    sizes = sorted(roi.component_sizes, reverse=True)
    report = {
        "schema": SCHEMA_VERSION,
        "input": {"path": source, "width": w, "height": h},
        "config": cfg.as_dict(),
        "specular": {
            "threshold": cfg.specular.threshold,
            "structuring_element": asdict(cfg.specular.se),
            "raw_pixels": int(raw_mask.sum()),
            "dilated_pixels": int(mask.sum()),
        },
        "inpaint": {
            "mode": "grayscale" if cfg.grayscale_inpaint else "per-channel",
            "channels": [dict(channel=name, **s.as_dict()) for name, s in zip(channels, stats)],
        },
        "kmeans": {
            "k": model.k,
            "init": cfg.kmeans.init,
            "seed": cfg.kmeans.seed,
            "features": "Lab" if cfg.use_lightness else "ab",
            **sample_info,
            "iterations": model.iterations,
            "converged": model.converged,
            "wcss": model.wcss,
            "means": model.means.tolist(),
            "sizes": model.sizes().tolist(),
        },
        "roi": {
            "cluster_index": roi.cluster_index,
            "scores": [s.as_dict() for s in roi.scores],
            "component_count": roi.component_count,
            "largest_component_sizes": sizes[:20],
            "roi_pixels": int(roi.roi_mask.sum()),
            "tight_bbox": list(roi.tight_bbox.as_tuple()),
            "bbox": list(roi.bbox.as_tuple()),
        },
        "output": {"width": int(cropped.shape[1]), "height": int(cropped.shape[0])},
        "warnings": warnings,
        TIMING_KEY: timing,
    }
    return PipelineResult(cropped, roi, inpainted, report, raw_mask, mask, model)


def strip_timing(report: dict) -> dict:
    return {k: v for k, v in report.items() if k != TIMING_KEY}


def write_outputs(image, result: PipelineResult, out_dir, stem: str, emit_intermediates: bool) -> dict:
    """Write the cropped image, the JSON report and (optionally) intermediates; return written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"cropped": out / f"{stem}_cropped.png", "report": out / f"{stem}_report.json"}
    save_image(result.cropped, paths["cropped"])
    if emit_intermediates:
        from .figures import render_stages

        paths["mask"] = out / f"{stem}_mask.png"
        paths["inpainted"] = out / f"{stem}_inpainted.png"
        paths["roi"] = out / f"{stem}_roi.png"
        paths["figure"] = out / f"{stem}_stages.png"
        save_mask(result.dilated_mask, paths["mask"])
        save_image(result.inpainted, paths["inpainted"])
        roi_img = result.inpainted.copy()
        roi_img[~result.roi.roi_mask] = 0
        save_image(roi_img, paths["roi"])
        render_stages(image, result.inpainted, result.roi.roi_mask, result.roi.bbox, paths["figure"], title=stem)
    result.report["outputs"] = {k: p.name for k, p in sorted(paths.items())}
    with open(paths["report"], "w") as fh:
        json.dump(result.report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return paths


def process_file(path, cfg: PipelineConfig, out_dir) -> PipelineResult:
    path = Path(path)
    try:
        image = load_image(path)
    except (OSError, ImageFormatError) as exc:
        raise PipelineError("load", f"{path}: {exc}", EXIT_IO) from exc
    result = run_pipeline(image, cfg, source=str(path))
    try:
        write_outputs(image, result, out_dir, path.stem, cfg.emit_intermediates)
    except OSError as exc:
        raise PipelineError("write", str(exc), EXIT_IO) from exc
    return result


def _batch_item(args) -> dict:
    path, cfg, out_root = args
    stem = Path(path).stem
    try:
        result = process_file(path, cfg, Path(out_root) / stem)
    except PipelineError as exc:
        return {"name": Path(path).name, "ok": False, "stage": exc.stage, "error": str(exc)}
    except Exception as exc:  # isolate the batch from any single-image failure
        return {"name": Path(path).name, "ok": False, "stage": "unknown", "error": f"{type(exc).__name__}: {exc}"}
    rep = result.report
    w, h = rep["input"]["width"], rep["input"]["height"]
    x0, y0, x1, y1 = rep["roi"]["bbox"]
    return {
        "name": Path(path).name,
        "ok": True,
        "report": f"{stem}/{stem}_report.json",
        "width": w,
        "height": h,
        "specular_pixels": rep["specular"]["raw_pixels"],
        "dilated_pixels": rep["specular"]["dilated_pixels"],
        "specular_fraction": rep["specular"]["dilated_pixels"] / float(w * h),
        "solver_converged": all(c["converged"] for c in rep["inpaint"]["channels"]),
        "kmeans_iterations": rep["kmeans"]["iterations"],
        "roi_cluster": rep["roi"]["cluster_index"],
        "bbox": [x0, y0, x1, y1],
        "bbox_fraction": (x1 - x0) * (y1 - y0) / float(w * h),
    }


CSV_FIELDS = (
    "name",
    "ok",
    "width",
    "height",
    "specular_pixels",
    "dilated_pixels",
    "solver_converged",
    "kmeans_iterations",
    "roi_cluster",
    "x0",
    "y0",
    "x1",
    "y1",
    "error",
)


def run_batch(input_dir, cfg: PipelineConfig | None = None, jobs: int = 1) -> dict:
    """Process every PNG/PPM in ``input_dir``; failures are recorded, not raised.

    Per-image outputs land in ``<output_dir>/<stem>/``; ``summary.json`` and
    ``summary.csv`` are written to ``output_dir``.
    """
    cfg = cfg or PipelineConfig()
    src = Path(input_dir)
    if not src.is_dir():
        raise PipelineError("batch", f"not a directory: {src}", EXIT_IO)
    files = sorted(p for p in src.iterdir() if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES)
    if not files:
        raise PipelineError("batch", f"no PNG or PPM images in {src}", EXIT_IO)
    out_root = Path(cfg.output_dir)
    out_root.mkdir(parents=True, exist_ok=True)

    work = [(str(p), cfg, str(out_root)) for p in files]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            items = list(pool.map(_batch_item, work))
    else:
        items = [_batch_item(w) for w in work]
    items.sort(key=lambda r: r["name"])

    failures = [{"name": r["name"], "stage": r["stage"], "error": r["error"]} for r in items if not r["ok"]]
    summary = {
        "schema": SCHEMA_VERSION,
        "input_dir": str(src),
        "count": len(items),
        "successes": sum(r["ok"] for r in items),
        "failure_count": len(failures),
        "failures": failures,
        "images": [r for r in items if r["ok"]],
    }
    with open(out_root / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(out_root / "summary.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS, extrasaction="ignore")
        writer.writeheader()
        for r in items:
            row = dict(r)
            if r["ok"]:
                row.update(zip(("x0", "y0", "x1", "y1"), r["bbox"]))
            writer.writerow(row)
    ok_rows = [r for r in items if r["ok"]]
    if ok_rows and cfg.emit_intermediates:
        from .figures import render_batch_summary

        render_batch_summary(ok_rows, out_root / "summary.png")
    return summary
