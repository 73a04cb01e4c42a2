"""The three export flows: tasks, per-segment observations, whole images.

Folder layout consumed by the frame exporters:

    <root>/rgb/<name>.png      color frames; digits in <name> are the frame id
    <root>/depth/<name>.npy    float depth in meters, same <name> as the rgb
    <root>/poses.jsonl         {"frame": int, "stamp": float, "pos": [3],
                                "quat"?: [4]}  (x, y, z, w)

Frames missing depth or pose are skipped with a warning.  Every output is
written atomically; single-document outputs embed the export manifest and
record streams get a ``<output>.manifest.json`` sidecar.
"""

from __future__ import annotations

import dataclasses
import json
import os
import re
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .segment import FramePose, Intrinsics, lift_segment


@dataclass(frozen=True)
class ExportManifest:
    """What produced a file: model/segmenter identifiers, dimension, sources."""

    text_model: str | None
    image_model: str | None
    segmenter: str | None
    dim: int
    normalized: bool
    pose_source: str | None = None
    intrinsics: dict | None = None

    def as_dict(self) -> dict:
        return {k: v for k, v in dataclasses.asdict(self).items() if v is not None}


def _atomic_write(path, text: str) -> None:
    tmp = Path(f"{path}.tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _write_records(path, records: list[dict], manifest: ExportManifest) -> None:
    _atomic_write(path, "".join(json.dumps(r) + "\n" for r in records))
    _atomic_write(
        Path(str(path) + ".manifest.json"),
        json.dumps(manifest.as_dict(), indent=2) + "\n",
    )


def export_tasks(labels: list[str], out, alpha: float, k: int, model) -> ExportManifest:
    """Embed task strings into a tasks file (manifest embedded).

    ``k`` is clamped to the schema bound m+1 so short task lists stay valid.
    """
    if k > len(labels) + 1:
        print(f"note: clamping k from {k} to {len(labels) + 1}", file=sys.stderr)
        k = len(labels) + 1
    embeddings = [model.embed(label) for label in labels]
    manifest = ExportManifest(
        text_model=model.id,
        image_model=None,
        segmenter=None,
        dim=int(embeddings[0].shape[0]) if embeddings else model.dim,
        normalized=True,
    )
    doc = {
        "labels": list(labels),
        "embeddings": [e.tolist() for e in embeddings],
        "alpha": alpha,
        "k": k,
        "manifest": manifest.as_dict(),
    }
    _atomic_write(out, json.dumps(doc, indent=2) + "\n")
    return manifest


_FRAME_DIGITS = re.compile(r"(\d+)")


def _frame_number(stem: str) -> int | None:
    match = _FRAME_DIGITS.search(stem)
    return int(match.group(1)) if match else None


@dataclass(frozen=True)
class Frame:
    number: int
    rgb_path: Path
    depth_path: Path | None
    pose: FramePose | None


def load_poses(root: Path) -> dict[int, FramePose]:
    path = root / "poses.jsonl"
    poses: dict[int, FramePose] = {}
    if not path.exists():
        return poses
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        record = json.loads(line)
        quat = record.get("quat", [0.0, 0.0, 0.0, 1.0])
        poses[int(record["frame"])] = FramePose(
            frame=int(record["frame"]),
            stamp=float(record.get("stamp", record["frame"])),
            position=np.asarray(record["pos"], dtype=np.float64),
            quaternion=np.asarray(quat, dtype=np.float64),
        )
    return poses


def scan_frames(root) -> list[Frame]:
    root = Path(root)
    rgb_dir = root / "rgb"
    if not rgb_dir.is_dir():
        return []
    poses = load_poses(root)
    frames = []
    for rgb_path in sorted(rgb_dir.iterdir()):
        if rgb_path.suffix.lower() not in (".png", ".jpg", ".jpeg"):
            continue
        number = _frame_number(rgb_path.stem)
        if number is None:
            print(f"warning: no frame number in {rgb_path.name}; skipped", file=sys.stderr)
            continue
        depth_path = root / "depth" / f"{rgb_path.stem}.npy"
        frames.append(
            Frame(
                number=number,
                rgb_path=rgb_path,
                depth_path=depth_path if depth_path.exists() else None,
                pose=poses.get(number),
            )
        )
    return frames


def export_observations(
    root,
    out,
    image_model,
    segment_fn,
    intrinsics: Intrinsics,
    primitives_out=None,
) -> ExportManifest:
    """One record per detected segment, lifted to a world-frame box.

    With ``primitives_out`` the same segments are also written as a
    primitives file (sequential ids), ready for batch clustering.
    """
    frames = scan_frames(root)
    observations: list[dict] = []
    primitives: list[dict] = []
    for frame in frames:
        if frame.depth_path is None or frame.pose is None:
            missing = "depth" if frame.depth_path is None else "pose"
            print(f"warning: frame {frame.number} has no {missing}; skipped", file=sys.stderr)
            continue
        rgb = np.asarray(Image.open(frame.rgb_path).convert("RGB"))
        depth = np.load(frame.depth_path)
        for segment in segment_fn(rgb):
            lifted = lift_segment(segment, depth, intrinsics, frame.pose)
            if lifted is None:
                print(
                    f"warning: segment in frame {frame.number} has no valid depth; skipped",
                    file=sys.stderr,
                )
                continue
            mins, maxs = lifted
            u0, v0, u1, v1 = segment.pixel_bounds
            crop = Image.fromarray(rgb[v0 : v1 + 1, u0 : u1 + 1])
            embedding = image_model.embed(crop)
            record = {
                "frame": frame.number,
                "stamp": frame.pose.stamp,
                "embedding": embedding.tolist(),
                "bbox": {"min": mins.tolist(), "max": maxs.tolist()},
            }
            observations.append(record)
            primitives.append(
                {
                    "id": len(primitives),
                    "embedding": record["embedding"],
                    "bbox": record["bbox"],
                    "stamp": frame.pose.stamp,
                }
            )
    manifest = ExportManifest(
        text_model=None,
        image_model=image_model.id,
        segmenter=segment_fn.id,
        dim=image_model.dim,
        normalized=True,
        pose_source="poses.jsonl",
        intrinsics=intrinsics.as_dict(),
    )
    _write_records(out, observations, manifest)
    if primitives_out is not None:
        _write_records(primitives_out, primitives, manifest)
    return manifest


def export_images(root, out, image_model) -> ExportManifest:
    """One record per frame: whole-image embedding plus the camera position."""
    frames = scan_frames(root)
    records = []
    for frame in frames:
        if frame.pose is None:
            print(f"warning: frame {frame.number} has no pose; skipped", file=sys.stderr)
            continue
        embedding = image_model.embed(Image.open(frame.rgb_path))
        records.append(
            {
                "id": frame.number,
                "stamp": frame.pose.stamp,
                "pos": frame.pose.position.tolist(),
                "embedding": embedding.tolist(),
            }
        )
    manifest = ExportManifest(
        text_model=None,
        image_model=image_model.id,
        segmenter=None,
        dim=image_model.dim,
        normalized=True,
        pose_source="poses.jsonl",
    )
    _write_records(out, records, manifest)
    return manifest
