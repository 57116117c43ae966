"""``prep`` command line: run, batch and phantom subcommands."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .imagecore import save_image, save_mask
from .inpaint import SolverConfig
from .kmeans import KmeansConfig
from .phantom import PhantomSpec, generate_phantom
from .pipeline import EXIT_IO, EXIT_OK, EXIT_USAGE, PipelineConfig, PipelineError, process_file, run_batch
from .specular import SpecularConfig, StructuringElement

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

log = logging.getLogger("cervprep")

# flag dest -> default; a TOML config file may set any of these keys (dashes or underscores)
DEFAULTS = {
    "out": "out",
    "threshold": 240,
    "dilate_radius": 1,
    "se": "square",
    "solver": "sor",
    "omega": 1.9,
    "tol": 1e-4,
    "max_iters": 20000,
    "k": 2,
    "init": "random-points",
    "seed": 0,
    "kmeans_max_iters": 100,
    "connectivity": 8,
    "margin": 10,
    "use_l": False,
    "grayscale_inpaint": False,
    "no_subsample": False,
    "emit_intermediates": False,
    "jobs": 1,
}


def _add_pipeline_flags(p: argparse.ArgumentParser) -> None:
    # every default is None so that "not given" can be told apart from a config-file value
    p.add_argument("--config", type=Path, help="TOML file with defaults for any flag below")
    p.add_argument("--out", help="output directory (default: out)")
    p.add_argument("--threshold", type=int, help="white cutoff per channel, 1-255 (default 240)")
    p.add_argument("--dilate-radius", type=int, help="structuring element radius (default 1)")
    p.add_argument("--se", choices=("square", "disk"), help="structuring element shape")
    p.add_argument("--solver", choices=("jacobi", "gs", "gauss-seidel", "sor"))
    p.add_argument("--omega", type=float, help="SOR relaxation factor in (0, 2) (default 1.9)")
    p.add_argument("--tol", type=float, help="max-norm residual target (default 1e-4)")
    p.add_argument("--max-iters", type=int, help="solver iteration cap (default 20000)")
    p.add_argument("--k", type=int, help="number of K-means clusters (default 2)")
    p.add_argument("--init", choices=("random", "random-points", "kmeanspp"))
    p.add_argument("--seed", type=int, help="K-means seed (default 0)")
    p.add_argument("--kmeans-max-iters", type=int, help="K-means iteration cap (default 100)")
    p.add_argument("--connectivity", type=int, choices=(4, 8))
    p.add_argument("--margin", type=int, help="crop margin in pixels (default 10)")
    p.add_argument("--use-l", action="store_true", default=None, help="cluster on (L, a, b) instead of (a, b)")
    p.add_argument("--grayscale-inpaint", action="store_true", default=None)
    p.add_argument("--no-subsample", action="store_true", default=None)
    p.add_argument("--emit-intermediates", action="store_true", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="prep",
        description="Remove specular highlights from cervigrams and crop the cervix region.",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="process one image")
    run.add_argument("input", type=Path)
    _add_pipeline_flags(run)

    batch = sub.add_parser("batch", help="process every PNG/PPM in a directory")
    batch.add_argument("input_dir", type=Path)
    _add_pipeline_flags(batch)
    batch.add_argument("--jobs", type=int, help="worker processes (default 1)")

    ph = sub.add_parser("phantom", help="write a synthetic cervigram and its ground truth")
    ph.add_argument("--seed", type=int, default=0)
    ph.add_argument("--count", type=int, default=1, help="consecutive seeds to generate")
    ph.add_argument("--out", type=Path, default=Path("phantoms"))
    ph.add_argument("--width", type=int, default=PhantomSpec.width)
    ph.add_argument("--height", type=int, default=PhantomSpec.height)
    ph.add_argument("--n-speculars", type=int, default=PhantomSpec.n_speculars)
    ph.add_argument("--noise-sigma", type=float, default=PhantomSpec.noise_sigma)
    ph.add_argument("--jitter", type=float, default=PhantomSpec.jitter)
    ph.add_argument("--no-frame", action="store_true")
    ph.add_argument("--format", choices=("png", "ppm"), default="png")
    return parser


def _load_config_file(path: Path) -> dict:
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    out = {}
    for key, value in raw.items():
        dest = key.replace("-", "_")
        if dest not in DEFAULTS:
            raise ValueError(f"{path}: unknown config key {key!r}")
        out[dest] = value
    return out


def resolve_options(args: argparse.Namespace) -> dict:
    """Defaults, overridden by the config file, overridden by explicit flags."""
    opts = dict(DEFAULTS)
    if getattr(args, "config", None) is not None:
        opts.update(_load_config_file(args.config))
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            opts[key] = value
    return opts


def config_from_options(opts: dict) -> PipelineConfig:
    return PipelineConfig(
        specular=SpecularConfig(
            threshold=int(opts["threshold"]),
            se=StructuringElement(opts["se"], int(opts["dilate_radius"])),
        ),
        solver=SolverConfig(
            method=opts["solver"],
            omega=float(opts["omega"]),
            tol=float(opts["tol"]),
            max_iters=int(opts["max_iters"]),
        ),
        kmeans=KmeansConfig(
            k=int(opts["k"]),
            init=opts["init"],
            seed=int(opts["seed"]),
            max_iters=int(opts["kmeans_max_iters"]),
        ),
        connectivity=int(opts["connectivity"]),
        crop_margin=int(opts["margin"]),
        use_lightness=bool(opts["use_l"]),
        grayscale_inpaint=bool(opts["grayscale_inpaint"]),
        subsample=not opts["no_subsample"],
        emit_intermediates=bool(opts["emit_intermediates"]),
        output_dir=str(opts["out"]),
    )


def _cmd_run(args, cfg: PipelineConfig) -> int:
    if not args.input.is_file():
        log.error("input file not found: %s", args.input)
        return EXIT_IO
    result = process_file(args.input, cfg, cfg.output_dir)
    rep = result.report
    print(
        f"{args.input.name}\tspecular={rep['specular']['dilated_pixels']}"
        f"\tcluster={rep['roi']['cluster_index']}\tbbox={','.join(map(str, rep['roi']['bbox']))}"
        f"\treport={Path(cfg.output_dir) / rep['outputs']['report']}"
    )
    return EXIT_OK


def _cmd_batch(args, cfg: PipelineConfig, jobs: int) -> int:
    summary = run_batch(args.input_dir, cfg, jobs=jobs)
    print(f"{summary['successes']} succeeded, {summary['failure_count']} failed; summary in {cfg.output_dir}")
    for f in summary["failures"]:
        print(f"FAILED\t{f['name']}\t{f['error']}", file=sys.stderr)
    return EXIT_OK


def _cmd_phantom(args) -> int:
    args.out.mkdir(parents=True, exist_ok=True)
    for seed in range(args.seed, args.seed + args.count):
        spec = PhantomSpec(
            width=args.width,
            height=args.height,
            n_speculars=args.n_speculars,
            noise_sigma=args.noise_sigma,
            jitter=args.jitter,
            frame=not args.no_frame,
            seed=seed,
        )
        image, truth = generate_phantom(spec)
        stem = f"phantom_{seed:04d}"
        save_image(image, args.out / f"{stem}.{args.format}")
        save_image(truth.clean_image, args.out / f"{stem}_clean.png")
        save_mask(truth.specular_mask, args.out / f"{stem}_specular_mask.png")
        save_mask(truth.ellipse_mask, args.out / f"{stem}_ellipse_mask.png")
        meta = {
            "schema": 1,
            "spec": spec.as_dict(),
            "ellipse": truth.ellipse,
            "ellipse_bbox": list(truth.ellipse_bbox.as_tuple()),
            "specular_pixels": int(truth.specular_mask.sum()),
        }
        with open(args.out / f"{stem}_truth.json", "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")
        print(args.out / f"{stem}.{args.format}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose > 1 else logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    if args.command == "phantom":
        try:
            return _cmd_phantom(args)
        except ValueError as exc:
            log.error("%s", exc)
            return EXIT_USAGE
        except OSError as exc:
            log.error("%s", exc)
            return EXIT_IO
    try:
        opts = resolve_options(args)
        cfg = config_from_options(opts)
    except (ValueError, TypeError, tomllib.TOMLDecodeError) as exc:
        log.error("bad configuration: %s", exc)
        return EXIT_USAGE
    except OSError as exc:
        log.error("cannot read config: %s", exc)
        return EXIT_IO
    try:
        if args.command == "run":
            return _cmd_run(args, cfg)
        return _cmd_batch(args, cfg, int(opts["jobs"]))
    except PipelineError as exc:
        log.error("%s", exc)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
