"""Scoring estimated objects against annotated boxes.

Ground truth marks three task-relevant objects.  The estimated scene gets
one box right, one box oversized (it contains the ground-truth centroid but
not vice versa, so the detection only counts under the relaxed criterion),
and hallucinates a third object that qualifies for precision by scoring
within 90% of the best match for its task.
"""

import numpy as np

import taskscene as ts
from taskscene.metrics import GroundTruthObject, evaluate

DIM = 8
e = np.eye(DIM)
TASKS = ts.TaskSet(
    ("get the toolbox", "move the pillow"),
    np.stack([ts.unit_vector(e[0]), ts.unit_vector(e[1])]),
    alpha=0.23,
    k=1,
)


def box(lo, hi):
    return ts.Aabb3(lo, hi)


def est(idx, emb, bbox):
    return ts.Cluster(frozenset({idx}), 1.0, np.array([0.0, 0.5, 0.5]), ts.unit_vector(emb), bbox)


ground_truth = [
    GroundTruthObject(0, box([0, 0, 0], [1, 1, 1]), (0,)),      # toolbox
    GroundTruthObject(1, box([4, 0, 0], [5, 1, 1]), (1,)),      # pillow A
    GroundTruthObject(2, box([8, 0, 0], [9, 1, 1]), (1,)),      # pillow B
]

objects = [
    est(0, e[0], box([0, 0, 0], [1, 1, 1])),                    # exact toolbox
    est(1, e[1], box([3, -1, -1], [7.5, 2, 2])),                # oversized pillow A
    est(2, 0.95 * e[1] + 0.312 * e[2], box([20, 0, 0], [21, 1, 1])),  # hallucination
]

report = evaluate(objects, ground_truth, TASKS)

print("per-mode metrics (osR = open-set recall, osP = open-set precision):")
print(f"  {'mode':8s} {'osR':>6s} {'osP':>6s} {'F1':>6s}")
for name, block in (("strict", report.strict), ("relaxed", report.relaxed)):
    print(f"  {name:8s} {block.recall:6.3f} {block.precision:6.3f} {block.f1:6.3f}")
print(f"  mean IoU of the top-n objects: {report.mean_iou:.3f}")
print(f"  estimated objects: {report.object_count}")
print()
print("why they differ:")
print(" - the oversized pillow box contains the annotation's centroid but is")
print("   not contained back, so it counts under relaxed and fails strict;")
print(" - the hallucinated object scores within 90% of the best pillow match,")
print("   entering the precision denominator without a box to back it up;")
print(f" - precision denominator audit: {report.precision_denominator_readings}")
