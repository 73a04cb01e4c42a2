"""Command line for the exporter."""

from __future__ import annotations

import argparse
import sys

from . import export
from .models import ModelError, image_model, text_model
from .segment import Intrinsics, segmenter


def _intrinsics(args) -> Intrinsics:
    return Intrinsics(fx=args.fx, fy=args.fy, cx=args.cx, cy=args.cy)


def cmd_export_tasks(args) -> int:
    model = text_model(args.model)
    manifest = export.export_tasks(args.task, args.out, args.alpha, args.k, model)
    print(f"{len(args.task)} tasks -> {args.out} (model {manifest.text_model}, D={manifest.dim})")
    return 0


def cmd_export_observations(args) -> int:
    model = image_model(args.model)
    seg = segmenter(args.segmenter, args.offset, args.min_area)
    manifest = export.export_observations(
        args.root,
        args.out,
        model,
        seg,
        _intrinsics(args),
        primitives_out=args.primitives_out,
    )
    extra = f" + {args.primitives_out}" if args.primitives_out else ""
    print(f"observations -> {args.out}{extra} (model {manifest.image_model}, D={manifest.dim})")
    return 0


def cmd_export_images(args) -> int:
    model = image_model(args.model)
    manifest = export.export_images(args.root, args.out, model)
    print(f"images -> {args.out} (model {manifest.image_model}, D={manifest.dim})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sceneexport",
        description="Turn raw images and task strings into clustering input files",
        epilog=(
            "frame folder layout: <root>/rgb/<name>.png, <root>/depth/<name>.npy "
            "(meters), <root>/poses.jsonl with {frame, stamp, pos, quat?} records; "
            "digits in <name> give the frame id"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("export-tasks", help="embed task strings into a tasks file")
    p.add_argument("task", nargs="+", help="task strings")
    p.add_argument("--out", required=True)
    p.add_argument("--alpha", type=float, default=0.23)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--model", default="chargram64")
    p.set_defaults(func=cmd_export_tasks)

    def add_frame_args(p):
        p.add_argument("--root", required=True, help="frame folder (see epilog)")
        p.add_argument("--out", required=True)
        p.add_argument("--model", default="colorgrid64")

    p = sub.add_parser("export-observations", help="segment frames into observation records")
    add_frame_args(p)
    p.add_argument("--primitives-out", default=None,
                   help="also write the segments as a primitives file")
    p.add_argument("--segmenter", default="threshold")
    p.add_argument("--offset", type=float, default=0.15,
                   help="luminance deviation from the median that marks foreground")
    p.add_argument("--min-area", type=int, default=25, help="minimum segment pixels")
    p.add_argument("--fx", type=float, default=500.0)
    p.add_argument("--fy", type=float, default=500.0)
    p.add_argument("--cx", type=float, default=32.0)
    p.add_argument("--cy", type=float, default=32.0)
    p.set_defaults(func=cmd_export_observations)

    p = sub.add_parser("export-images", help="embed whole frames into an images file")
    add_frame_args(p)
    p.set_defaults(func=cmd_export_images)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ModelError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
