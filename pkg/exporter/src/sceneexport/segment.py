"""Class-agnostic segmentation and the segment-to-3D-box lifting.

Segmentation is a luminance-threshold connected-components pass: pixels
deviating from the image median by more than an offset are foreground, and
each connected blob above a minimum area becomes a segment.  Lifting takes
the median depth inside the mask, back-projects the mask's pixel bounds at
that depth through a pinhole model, gives the box a depth extent from the
mask's central depth spread, and transforms the corners into the world
frame.  A crude axis-aligned box, sufficient for generating data files.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.spatial.transform import Rotation


@dataclass(frozen=True)
class Intrinsics:
    fx: float
    fy: float
    cx: float
    cy: float

    def as_dict(self) -> dict:
        return {"fx": self.fx, "fy": self.fy, "cx": self.cx, "cy": self.cy}


@dataclass(frozen=True)
class FramePose:
    frame: int
    stamp: float
    position: np.ndarray  # (3,)
    quaternion: np.ndarray  # (4,) as (x, y, z, w); identity when absent

    def transform(self, points: np.ndarray) -> np.ndarray:
        rot = Rotation.from_quat(self.quaternion)
        return rot.apply(points) + self.position[None, :]


@dataclass(frozen=True)
class Segment:
    mask: np.ndarray  # bool HxW
    pixel_bounds: tuple[int, int, int, int]  # u0, v0, u1, v1 inclusive
    area: int


def luminance(rgb: np.ndarray) -> np.ndarray:
    return (rgb.astype(np.float64) / 255.0) @ np.array([0.299, 0.587, 0.114])


def threshold_segments(rgb: np.ndarray, offset: float = 0.15, min_area: int = 25) -> list[Segment]:
    """Connected components of pixels deviating from the median luminance."""
    lum = luminance(rgb)
    foreground = np.abs(lum - np.median(lum)) > offset
    labels, count = ndimage.label(foreground)
    segments = []
    for index in range(1, count + 1):
        mask = labels == index
        area = int(mask.sum())
        if area < min_area:
            continue
        vs, us = np.nonzero(mask)
        segments.append(
            Segment(
                mask=mask,
                pixel_bounds=(int(us.min()), int(vs.min()), int(us.max()), int(vs.max())),
                area=area,
            )
        )
    return segments


def lift_segment(
    segment: Segment,
    depth: np.ndarray,
    intrinsics: Intrinsics,
    pose: FramePose,
) -> tuple[np.ndarray, np.ndarray] | None:
    """World-frame AABB (mins, maxs) of a segment, or None without valid depth."""
    values = depth[segment.mask]
    values = values[np.isfinite(values) & (values > 0.0)]
    if values.size == 0:
        return None
    d_med = float(np.median(values))
    # a zero-thickness slab would make every box volumeless; spread the
    # depth extent by the mask's central deviation (floored at 2 cm)
    spread = max(1.4826 * float(np.median(np.abs(values - d_med))), 0.02)
    u0, v0, u1, v1 = segment.pixel_bounds
    corners = []
    for z in (d_med - spread, d_med + spread):
        z = max(z, 1e-3)
        for u in (u0, u1 + 1):
            for v in (v0, v1 + 1):
                corners.append(
                    [(u - intrinsics.cx) / intrinsics.fx * z,
                     (v - intrinsics.cy) / intrinsics.fy * z,
                     z]
                )
    world = pose.transform(np.asarray(corners, dtype=np.float64))
    return world.min(axis=0), world.max(axis=0)


def segmenter(spec: str, offset: float, min_area: int):
    if spec != "threshold":
        raise ValueError(f"unknown segmenter {spec!r}")

    def run(rgb: np.ndarray) -> list[Segment]:
        return threshold_segments(rgb, offset=offset, min_area=min_area)

    run.id = f"threshold(offset={offset},min_area={min_area})"
    return run
