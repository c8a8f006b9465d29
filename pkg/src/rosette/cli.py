"""Command-line entry point.

Subcommands: generate, evaluate, stats, mix, dump-scene. Exit codes:
0 success, 1 validation error, 2 I/O error, 3 internal error.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .config import ConfigError, GenerationConfig, load_config
from .dataset import mix_manifests, read_manifest
from .metrics import EvaluationError, evaluate_directory
from .rng import RandomSource
from .stats import (centroid_heatmap, leaf_count_histogram, write_heatmap_csv,
                    write_heatmap_png, write_histogram_csv)
from .textures import BankError, TextureMode

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2
EXIT_INTERNAL = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rosette",
        description="Synthetic rosette-plant dataset generator and evaluation tools")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="generate a labeled synthetic dataset")
    gen.add_argument("--config", help="config file (flat key = value text)")
    gen.add_argument("--out", required=True, help="output directory")
    gen.add_argument("--count", type=int, help="number of images (overrides dataset_size)")
    gen.add_argument("--seed", type=int, help="override global_seed")
    gen.add_argument("--textures", help="leaf texture bank directory")
    gen.add_argument("--backgrounds", help="background plate bank directory")
    gen.add_argument("--texture-mode", choices=[m.value for m in TextureMode],
                     help="plant = one texture per dataset, leaf/arbitrary = per leaf")
    gen.add_argument("--indices", help="comma-separated image indices to (re)generate")
    gen.add_argument("--workers", type=int, default=os.cpu_count() or 1,
                     help="parallel workers (results are worker-count independent)")
    gen.add_argument("--preview", action="store_true",
                     help="also write colorized label previews")
    gen.add_argument("--annotations", choices=["masks", "polygons", "none"],
                     default="masks", help="annotation export style")
    gen.add_argument("--dump-scene", action="store_true",
                     help="also write per-image plant geometry dumps")

    ev = sub.add_parser("evaluate", help="score predictions with symmetric best dice")
    ev.add_argument("--gt", required=True, help="ground-truth label directory")
    ev.add_argument("--pred", required=True, help="predicted label directory")
    ev.add_argument("--report", required=True, help="output CSV path")

    st = sub.add_parser("stats", help="centroid heatmap and leaf-count histogram")
    st.add_argument("--source", required=True,
                    help="manifest.csv or a directory of label maps")
    st.add_argument("--heatmap", help="write the G x G centroid-count grid CSV here")
    st.add_argument("--heatmap-png", help="also write a grayscale heatmap PNG")
    st.add_argument("--hist", help="write the leaf-count histogram CSV here")
    st.add_argument("--grid-size", type=int, default=32)

    mx = sub.add_parser("mix", help="emit 50/50 real+synthetic training batches")
    mx.add_argument("--real", required=True, help="real manifest.csv")
    mx.add_argument("--synthetic", required=True, help="synthetic manifest.csv")
    mx.add_argument("--batch", type=int, required=True, help="even batch size")
    mx.add_argument("--seed", type=int, default=0)
    mx.add_argument("--out", required=True, help="output batch list CSV")

    ds = sub.add_parser("dump-scene", help="serialize one plant's geometry")
    ds.add_argument("--config", help="config file")
    ds.add_argument("--seed", type=int, help="override global_seed")
    ds.add_argument("--index", type=int, default=0, help="image index to rebuild")
    ds.add_argument("--out", required=True, help="output scene text file")
    return parser


def _resolve_config(args) -> GenerationConfig:
    cfg = load_config(args.config) if args.config else GenerationConfig()
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["global_seed"] = args.seed
    if getattr(args, "count", None) is not None:
        overrides["dataset_size"] = args.count
    if getattr(args, "textures", None):
        overrides["texture_bank_path"] = args.textures
    if getattr(args, "backgrounds", None):
        overrides["background_bank_path"] = args.backgrounds
    if getattr(args, "texture_mode", None):
        overrides["texture_mode"] = TextureMode.from_name(args.texture_mode)
    return cfg.with_overrides(**overrides) if overrides else cfg


def _cmd_generate(args) -> int:
    from .pipeline import generate_dataset
    cfg = _resolve_config(args)
    indices = None
    if args.indices:
        indices = [int(tok) for tok in args.indices.split(",") if tok.strip()]
    annotations = None if args.annotations == "none" else args.annotations
    manifest = generate_dataset(cfg, args.out, indices=indices,
                                workers=max(1, args.workers),
                                write_preview=args.preview,
                                annotations=annotations,
                                dump_scenes=args.dump_scene, progress=True)
    print(f"wrote {len(manifest.records)} samples to {args.out}")
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    report = evaluate_directory(args.gt, args.pred)
    report.to_csv(args.report)
    print(f"images {len(report.scores)}  mean SBD {report.mean_sbd:.4f}  "
          f"mean DiC {report.mean_dic:+.3f}  mean |DiC| {report.mean_abs_dic:.3f}")
    return EXIT_OK


def _cmd_stats(args) -> int:
    if not args.heatmap and not args.hist:
        raise ConfigError("nothing to do: pass --heatmap and/or --hist")
    if args.heatmap or args.heatmap_png:
        heatmap = centroid_heatmap(args.source, grid_size=args.grid_size)
        if args.heatmap:
            write_heatmap_csv(heatmap, args.heatmap)
        if args.heatmap_png:
            write_heatmap_png(heatmap, args.heatmap_png)
        print(f"instances {heatmap.total}  radial_std {heatmap.radial_std:.3f} px")
    if args.hist:
        hist = leaf_count_histogram(args.source)
        write_histogram_csv(hist, args.hist)
        print(f"images {hist.total_images}  count mean {hist.mean:.3f}  "
              f"variance {hist.variance:.3f}")
    return EXIT_OK


def _cmd_mix(args) -> int:
    import csv
    real = read_manifest(args.real)
    synthetic = read_manifest(args.synthetic)
    src = RandomSource.for_dataset(args.seed, "mix")
    batches = mix_manifests(real, synthetic, args.batch, src)
    with Path(args.out).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["batch", "slot", "source", "index", "rgb", "label"])
        for b, batch in enumerate(batches):
            for s, (source, rec) in enumerate(batch):
                writer.writerow([b, s, source, rec.index, rec.rgb_path, rec.label_path])
    print(f"wrote {len(batches)} batches of {args.batch} to {args.out}")
    return EXIT_OK


def _cmd_dump_scene(args) -> int:
    from .leaf import load_leaf_template
    from .plant import assemble_plant, scene_dump_text
    cfg = _resolve_config(args)
    template = load_leaf_template(cfg.template_path or None)
    plant = assemble_plant(RandomSource.for_image(cfg.global_seed, args.index, "plant"),
                           cfg, template)
    Path(args.out).write_text(scene_dump_text(plant))
    print(f"dumped {len(plant.leaves)} leaves of image {args.index} to {args.out}")
    return EXIT_OK


_COMMANDS = {
    "generate": _cmd_generate,
    "evaluate": _cmd_evaluate,
    "stats": _cmd_stats,
    "mix": _cmd_mix,
    "dump-scene": _cmd_dump_scene,
}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, BankError, EvaluationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
