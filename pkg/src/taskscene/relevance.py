"""Task-relevance conditionals p(task | primitive) from cosine scores.

Each primitive gets a score vector over m+1 slots: slot 0 carries the fixed
null-task score alpha, slots 1..m the cosine similarities to the real tasks.
A primitive whose best task similarity falls below alpha is assigned the
one-hot null distribution (pre-pruning).  Otherwise the top-k scores are
kept, the rank-r survivor is weighted by (k - r + 1), and the result is
normalized to a distribution.  The null slot competes in the ranking like
any task; rank ties break toward the lower index.
"""

from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np

from .core import Primitive, TaskSet
from .errors import DimensionMismatch, NoPositiveRelevance


def score_vector(primitive: Primitive, tasks: TaskSet) -> np.ndarray:
    """Null score alpha followed by the m task cosine similarities."""
    if primitive.embedding.shape[0] != tasks.dim:
        raise DimensionMismatch(
            f"primitive {primitive.id} has dim {primitive.embedding.shape[0]}, "
            f"tasks have dim {tasks.dim}"
        )
    scores = np.empty(tasks.m + 1, dtype=np.float64)
    scores[0] = tasks.alpha
    scores[1:] = np.clip(tasks.embeddings @ primitive.embedding, -1.0, 1.0)
    scores.setflags(write=False)
    return scores


def _null_one_hot(m: int) -> np.ndarray:
    dist = np.zeros(m + 1, dtype=np.float64)
    dist[0] = 1.0
    dist.setflags(write=False)
    return dist


def conditional_distribution(scores: np.ndarray, tasks: TaskSet) -> np.ndarray:
    """Distribution over the m+1 task slots for one score vector."""
    m = tasks.m
    if scores.shape != (m + 1,):
        raise DimensionMismatch(
            f"score vector has shape {scores.shape}, expected ({m + 1},)"
        )
    if float(np.max(scores[1:])) < tasks.alpha:
        return _null_one_hot(m)
    k = tasks.k
    # Stable argsort on the negated scores ranks equal values by lower index.
    order = np.argsort(-scores, kind="stable")[:k]
    weights = np.zeros(m + 1, dtype=np.float64)
    weights[order] = scores[order] * np.arange(k, 0, -1, dtype=np.float64)
    np.maximum(weights, 0.0, out=weights)
    total = float(weights.sum())
    if total <= 0.0:
        raise NoPositiveRelevance("no positive relevance among the retained scores")
    weights /= total
    weights.setflags(write=False)
    return weights


def relevance_matrix(
    primitives: Sequence[Primitive], tasks: TaskSet
) -> tuple[dict[int, np.ndarray], set[int]]:
    """Conditional distribution per primitive id, plus the pre-pruned ids.

    Vectorized over the whole batch; ``pruned`` reports every id whose
    distribution came out as the null one-hot.
    """
    if not primitives:
        return {}, set()
    ids = [p.id for p in primitives]
    emb = np.stack([p.embedding for p in primitives])
    if emb.shape[1] != tasks.dim:
        raise DimensionMismatch(
            f"primitive embeddings have dim {emb.shape[1]}, tasks have dim {tasks.dim}"
        )
    n, m, k = len(ids), tasks.m, tasks.k
    scores = np.empty((n, m + 1), dtype=np.float64)
    scores[:, 0] = tasks.alpha
    scores[:, 1:] = np.clip(emb @ tasks.embeddings.T, -1.0, 1.0)

    null_rows = scores[:, 1:].max(axis=1) < tasks.alpha
    order = np.argsort(-scores, axis=1, kind="stable")[:, :k]
    weights = np.zeros_like(scores)
    ranked = np.take_along_axis(scores, order, axis=1) * np.arange(k, 0, -1, dtype=np.float64)
    np.put_along_axis(weights, order, ranked, axis=1)
    np.maximum(weights, 0.0, out=weights)
    totals = weights.sum(axis=1)

    bad = ~null_rows & (totals <= 0.0)
    if np.any(bad):
        offender = ids[int(np.argmax(bad))]
        raise NoPositiveRelevance(
            f"primitive {offender}: no positive relevance among the retained scores",
            primitive_id=offender,
        )

    dists: dict[int, np.ndarray] = {}
    pruned: set[int] = set()
    null_dist = _null_one_hot(m)
    for row, pid in enumerate(ids):
        if null_rows[row]:
            dists[pid] = null_dist
            pruned.add(pid)
            continue
        d = weights[row] / totals[row]
        d.setflags(write=False)
        dists[pid] = d
        # A distribution can still collapse onto the null slot when alpha
        # tops the ranking with k=1; those ids are reported as pruned too.
        if d[0] == 1.0:
            pruned.add(pid)
    return dists, pruned


def split_pruned(
    primitives: Sequence[Primitive],
    dists: Mapping[int, np.ndarray],
    pruned: set[int],
) -> list[Primitive]:
    """Primitives that survive pre-pruning, in input order."""
    return [p for p in primitives if p.id not in pruned]
