"""Uniform grid broad phase for axis-aligned box overlap discovery."""

from __future__ import annotations

from itertools import combinations
from typing import Sequence

import numpy as np

from .core import Aabb3, Primitive, bbox_overlaps


class BoxGrid:
    """Hashes boxes into cubic cells; boxes sharing a cell are candidates."""

    def __init__(self, cell_size: float):
        self.cell_size = max(float(cell_size), 1e-9)
        self._cells: dict[tuple[int, int, int], list[int]] = {}
        self._boxes: dict[int, Aabb3] = {}

    def _cell_span(self, box: Aabb3):
        lo = np.floor(box.mins / self.cell_size).astype(np.int64)
        hi = np.floor(box.maxs / self.cell_size).astype(np.int64)
        return lo, hi

    def insert(self, key: int, box: Aabb3) -> None:
        self._boxes[key] = box
        lo, hi = self._cell_span(box)
        for ix in range(lo[0], hi[0] + 1):
            for iy in range(lo[1], hi[1] + 1):
                for iz in range(lo[2], hi[2] + 1):
                    self._cells.setdefault((ix, iy, iz), []).append(key)

    def overlapping(self, box: Aabb3, exclude: int | None = None) -> list[int]:
        """Keys of stored boxes with positive-volume intersection with ``box``."""
        lo, hi = self._cell_span(box)
        seen: set[int] = set()
        for ix in range(lo[0], hi[0] + 1):
            for iy in range(lo[1], hi[1] + 1):
                for iz in range(lo[2], hi[2] + 1):
                    seen.update(self._cells.get((ix, iy, iz), ()))
        seen.discard(exclude)
        return sorted(k for k in seen if bbox_overlaps(self._boxes[k], box))


def median_diagonal(boxes: Sequence[Aabb3]) -> float:
    if not boxes:
        return 1.0
    med = float(np.median([b.diagonal for b in boxes]))
    return med if med > 0.0 else 1.0


def build_grid(primitives: Sequence[Primitive]) -> BoxGrid:
    """Grid over all primitives, cell size = median bbox diagonal."""
    grid = BoxGrid(median_diagonal([p.bbox for p in primitives]))
    for p in sorted(primitives, key=lambda q: q.id):
        grid.insert(p.id, p.bbox)
    return grid


def overlap_edges(primitives: Sequence[Primitive]) -> list[tuple[int, int]]:
    """All id pairs whose boxes overlap with positive volume, sorted."""
    if len(primitives) < 2:
        return []
    grid = BoxGrid(median_diagonal([p.bbox for p in primitives]))
    boxes = {p.id: p.bbox for p in primitives}
    for pid in sorted(boxes):
        grid.insert(pid, boxes[pid])
    pairs: set[tuple[int, int]] = set()
    for bucket in grid._cells.values():
        if len(bucket) < 2:
            continue
        for a, b in combinations(bucket, 2):
            key = (min(a, b), max(a, b))
            if key not in pairs and bbox_overlaps(boxes[key[0]], boxes[key[1]]):
                pairs.add(key)
    return sorted(pairs)
