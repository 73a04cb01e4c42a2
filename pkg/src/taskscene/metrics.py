"""Open-set detection metrics over estimated object boxes.

Recall queries, for every task, as many top-ranked objects as that task has
ground-truth boxes and counts greedy one-to-one matches.  Precision counts,
per task, the objects whose argmax task it is and whose score reaches 90%
of the task's best score; matched ones are correct.  A detection is
``strict`` when the estimated box contains the ground-truth centroid and
vice versa, ``relaxed`` when at least one direction holds (so every strict
detection also counts as relaxed).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import Aabb3, Cluster, TaskSet, bbox_iou
from .errors import TaskSceneError

STRICT = "strict"
RELAXED = "relaxed"
NONE = "none"


@dataclass(frozen=True, eq=False)
class GroundTruthObject:
    id: int
    bbox: Aabb3
    task_indices: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "task_indices", tuple(int(i) for i in self.task_indices))
        if not self.task_indices:
            raise TaskSceneError(f"ground-truth object {self.id} satisfies no task")


def detection_mode(est: Aabb3, gt: Aabb3) -> str:
    """strict / relaxed / none from mutual centroid containment."""
    est_holds_gt = est.contains_point(gt.center)
    gt_holds_est = gt.contains_point(est.center)
    if est_holds_gt and gt_holds_est:
        return STRICT
    if est_holds_gt or gt_holds_est:
        return RELAXED
    return NONE


def _hit(est: Aabb3, gt: Aabb3, mode: str) -> bool:
    got = detection_mode(est, gt)
    if mode == STRICT:
        return got == STRICT
    if mode == RELAXED:
        return got in (STRICT, RELAXED)
    raise TaskSceneError(f"unknown detection mode {mode!r}")


def _scores_for_task(objects: Sequence[Cluster], task_embedding: np.ndarray) -> list[float]:
    return [float(np.dot(c.embedding, task_embedding)) for c in objects]


def _ranked(objects: Sequence[Cluster], scores: list[float]) -> list[int]:
    # Ties break on the smallest member id, which travels with the object,
    # so rankings are invariant to permutations of the input list.
    order = sorted(range(len(objects)), key=lambda i: (-scores[i], objects[i].min_member))
    return order


def _greedy_match(
    candidates: list[int],
    objects: Sequence[Cluster],
    gts: list[GroundTruthObject],
    mode: str,
) -> dict[int, int]:
    """Match objects (in the given order) one-to-one to ground-truth boxes.

    Each object takes the unmatched box it hits with the highest IoU (ties
    toward the lower ground-truth id).  Returns object index -> gt index.
    """
    taken: set[int] = set()
    matches: dict[int, int] = {}
    for obj_idx in candidates:
        best = None
        for gt_idx, gt in enumerate(gts):
            if gt_idx in taken or not _hit(objects[obj_idx].bbox, gt.bbox, mode):
                continue
            key = (-bbox_iou(objects[obj_idx].bbox, gt.bbox), gt.id)
            if best is None or key < best[0]:
                best = (key, gt_idx)
        if best is not None:
            taken.add(best[1])
            matches[obj_idx] = best[1]
    return matches


@dataclass(eq=False)
class TaskMetrics:
    task_index: int
    gt_count: int
    recall_correct: int
    precision_correct: int
    precision_denominator: int

    @property
    def recall(self) -> float:
        return self.recall_correct / self.gt_count if self.gt_count else 0.0

    @property
    def precision(self) -> float:
        return (
            self.precision_correct / self.precision_denominator
            if self.precision_denominator
            else 0.0
        )

    @property
    def f1(self) -> float:
        return _f1(self.recall, self.precision)


@dataclass(eq=False)
class ModeMetrics:
    recall: float
    precision: float
    f1: float
    per_task: tuple[TaskMetrics, ...]


@dataclass(eq=False)
class MetricsReport:
    strict: ModeMetrics
    relaxed: ModeMetrics
    mean_iou: float
    object_count: int
    warnings: tuple[str, ...] = ()
    precision_denominator_readings: dict = field(default_factory=dict)


def _f1(recall: float, precision: float) -> float:
    if recall + precision == 0.0:
        return 0.0
    return 2.0 * recall * precision / (recall + precision)


def _tasks_with_gt(
    gts: Sequence[GroundTruthObject], tasks: TaskSet
) -> tuple[dict[int, list[GroundTruthObject]], list[str]]:
    by_task: dict[int, list[GroundTruthObject]] = {j: [] for j in range(tasks.m)}
    for gt in gts:
        for j in gt.task_indices:
            if not 0 <= j < tasks.m:
                raise TaskSceneError(
                    f"ground-truth object {gt.id} references task index {j}, "
                    f"but only {tasks.m} tasks exist"
                )
            by_task[j].append(gt)
    warnings = [
        f"task {j} ({tasks.labels[j]!r}) has no ground-truth objects; excluded"
        for j in range(tasks.m)
        if not by_task[j]
    ]
    return {j: g for j, g in by_task.items() if g}, warnings


def _precision_candidates(
    objects: Sequence[Cluster], tasks: TaskSet
) -> tuple[dict[int, list[int]], dict]:
    """Qualifying (object, task) pairs for the precision denominator.

    An object counts toward task j when (a) j is the object's most similar
    task and (b) its score is at least 90% of the best score any object
    reaches for j.  Counts under each sub-reading alone are reported for
    auditability.
    """
    if not objects:
        return {}, {"argmax_only": 0, "threshold_only": 0, "joint": 0}
    score_matrix = np.array([[float(np.dot(c.embedding, t)) for t in tasks.embeddings] for c in objects])
    argmax_task = np.argmax(score_matrix, axis=1)
    best_per_task = score_matrix.max(axis=0)
    qualifying: dict[int, list[int]] = {j: [] for j in range(tasks.m)}
    n_argmax = n_threshold = n_joint = 0
    for obj_idx in range(len(objects)):
        for j in range(tasks.m):
            is_argmax = argmax_task[obj_idx] == j
            meets_threshold = score_matrix[obj_idx, j] >= 0.9 * best_per_task[j]
            n_argmax += is_argmax
            n_threshold += meets_threshold
            if is_argmax and meets_threshold:
                n_joint += 1
                qualifying[j].append(obj_idx)
    for j in qualifying:
        qualifying[j].sort(key=lambda i: (-score_matrix[i, j], objects[i].min_member))
    readings = {
        "argmax_only": int(n_argmax),
        "threshold_only": int(n_threshold),
        "joint": int(n_joint),
    }
    return qualifying, readings


def _mode_metrics(
    objects: Sequence[Cluster],
    by_task: dict[int, list[GroundTruthObject]],
    tasks: TaskSet,
    mode: str,
    qualifying: dict[int, list[int]],
) -> ModeMetrics:
    per_task = []
    total_gt = total_recall_correct = 0
    total_denom = total_precision_correct = 0
    for j, gt_list in sorted(by_task.items()):
        scores = _scores_for_task(objects, tasks.embeddings[j])
        top = _ranked(objects, scores)[: len(gt_list)]
        recall_matches = _greedy_match(top, objects, gt_list, mode)
        qualified = qualifying.get(j, [])
        precision_matches = _greedy_match(qualified, objects, gt_list, mode)
        tm = TaskMetrics(
            task_index=j,
            gt_count=len(gt_list),
            recall_correct=len(recall_matches),
            precision_correct=len(precision_matches),
            precision_denominator=len(qualified),
        )
        per_task.append(tm)
        total_gt += tm.gt_count
        total_recall_correct += tm.recall_correct
        total_denom += tm.precision_denominator
        total_precision_correct += tm.precision_correct
    recall = total_recall_correct / total_gt if total_gt else 0.0
    precision = total_precision_correct / total_denom if total_denom else 0.0
    return ModeMetrics(recall, precision, _f1(recall, precision), tuple(per_task))


def open_set_recall(
    objects: Sequence[Cluster],
    gts: Sequence[GroundTruthObject],
    tasks: TaskSet,
    mode: str = STRICT,
) -> float:
    """Correct top-n detections over the total ground-truth count."""
    by_task, _ = _tasks_with_gt(gts, tasks)
    qualifying, _ = _precision_candidates(objects, tasks)
    return _mode_metrics(objects, by_task, tasks, mode, qualifying).recall


def open_set_precision(
    objects: Sequence[Cluster],
    gts: Sequence[GroundTruthObject],
    tasks: TaskSet,
    mode: str = STRICT,
) -> float:
    """Correct detections over the 90%-of-best qualifying detections."""
    by_task, _ = _tasks_with_gt(gts, tasks)
    qualifying, _ = _precision_candidates(objects, tasks)
    return _mode_metrics(objects, by_task, tasks, mode, qualifying).precision


def mean_iou(
    objects: Sequence[Cluster],
    gts: Sequence[GroundTruthObject],
    tasks: TaskSet,
    mode: str = RELAXED,
) -> float:
    """Average IoU of each task's top-n objects against their matched boxes.

    Unmatched top objects contribute 0; matching uses the relaxed criterion
    unless told otherwise.
    """
    by_task, _ = _tasks_with_gt(gts, tasks)
    total = 0.0
    slots = 0
    for j, gt_list in sorted(by_task.items()):
        scores = _scores_for_task(objects, tasks.embeddings[j])
        top = _ranked(objects, scores)[: len(gt_list)]
        matches = _greedy_match(top, objects, gt_list, mode)
        for obj_idx in top:
            slots += 1
            if obj_idx in matches:
                total += bbox_iou(objects[obj_idx].bbox, gt_list[matches[obj_idx]].bbox)
    return total / slots if slots else 0.0


def evaluate(
    objects: Sequence[Cluster],
    gts: Sequence[GroundTruthObject],
    tasks: TaskSet,
) -> MetricsReport:
    """Full report: strict and relaxed blocks, mean IoU, object count."""
    by_task, warnings = _tasks_with_gt(gts, tasks)
    qualifying, readings = _precision_candidates(objects, tasks)
    if not objects:
        warnings = warnings + ["no objects in the scene graph; precision set to 0"]
    strict = _mode_metrics(objects, by_task, tasks, STRICT, qualifying)
    relaxed = _mode_metrics(objects, by_task, tasks, RELAXED, qualifying)
    return MetricsReport(
        strict=strict,
        relaxed=relaxed,
        mean_iou=mean_iou(objects, gts, tasks),
        object_count=len(objects),
        warnings=tuple(warnings),
        precision_denominator_readings=readings,
    )
