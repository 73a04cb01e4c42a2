"""Command-line entry point.

Subcommands: cluster (batch), stream (online), regions, eval, query, and
validate.  Every RunConfig field has a matching kebab-case flag; a JSON
config file may supply defaults and explicit flags override it.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from . import io
from .errors import TaskSceneError
from .incremental import finalize
from .io import RunConfig
from .metrics import evaluate
from .pipeline import batch_cluster, stream_cluster
from .scenegraph import SceneGraph, assemble, assign_place_features, cluster_regions, query as query_objects


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("run configuration")
    group.add_argument("--config", help="JSON file with RunConfig defaults")
    group.add_argument("--delta-bar-objects", type=float, default=None)
    group.add_argument("--delta-bar-regions", type=float, default=None)
    group.add_argument("--alpha-objects", type=float, default=None)
    group.add_argument("--alpha-regions", type=float, default=None)
    group.add_argument("--k", type=int, default=None)
    group.add_argument("--theta-track", type=float, default=None)
    group.add_argument("--gamma-iou", type=float, default=None)
    group.add_argument("--tau-seconds", type=float, default=None)
    group.add_argument("--place-feature-strategy", choices=("average", "closest"), default=None)
    group.add_argument("--seed", type=int, default=None)


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    values: dict = {}
    if getattr(args, "config", None):
        values.update(io.load_config_file(args.config))
    for field in dataclasses.fields(RunConfig):
        flag_value = getattr(args, field.name, None)
        if flag_value is not None:
            values[field.name] = flag_value
    return RunConfig(**values)


def _effective(tasks, config: RunConfig, mode: str) -> dict:
    scoped = config.object_task_set(tasks) if mode == "objects" else config.region_task_set(tasks)
    return {
        "mode": mode,
        "alpha": scoped.alpha,
        "k": scoped.k,
        "dim": tasks.dim,
        "task_count": tasks.m,
    }


def cmd_cluster(args) -> int:
    config = _resolve_config(args)
    tasks = config.object_task_set(io.load_tasks(args.tasks))
    primitives = io.load_primitives(args.primitives, dim=tasks.dim)
    if not primitives:
        scene = SceneGraph(objects=())
        io.write_scene_graph(args.out, scene, tasks, config, _effective(tasks, config, "objects"))
        print(f"0 primitives -> 0 objects ({args.out})")
        return 0
    result, pruned = batch_cluster(primitives, tasks, config.delta_bar_objects)
    scene = assemble(result, tasks)
    io.write_scene_graph(args.out, scene, tasks, config, _effective(tasks, config, "objects"))
    print(
        f"{len(primitives)} primitives ({len(pruned)} pruned) -> "
        f"{len(result.clusters)} clusters -> {len(scene.objects)} objects ({args.out})"
    )
    return 0


def cmd_stream(args) -> int:
    config = _resolve_config(args)
    tasks = config.object_task_set(io.load_tasks(args.tasks))
    observations = io.load_observations(args.observations, dim=tasks.dim)
    state, tracker, rows = stream_cluster(
        observations,
        tasks,
        config.delta_bar_objects,
        config.theta_track,
        config.gamma_iou,
        config.tau_seconds,
    )
    result = finalize(state)
    scene = assemble(result, tasks)
    io.write_scene_graph(args.out, scene, tasks, config, _effective(tasks, config, "objects"))
    io.write_latency_log(args.latency_log, rows)
    print(
        f"{len(observations)} observations -> {state.total_primitives} primitives -> "
        f"{len(scene.objects)} objects ({args.out}); latency log: {args.latency_log}"
    )
    return 0


def cmd_regions(args) -> int:
    config = _resolve_config(args)
    tasks = config.region_task_set(io.load_tasks(args.tasks))
    places = io.load_places(args.places)
    images = io.load_images(args.images, dim=tasks.dim)
    features = assign_place_features(places, images, config.place_feature_strategy)
    regions = cluster_regions(places, features, tasks, config.delta_bar_regions)
    io.write_regions(args.out, regions, tasks, config, _effective(tasks, config, "regions"))
    print(f"{len(places)} places -> {len(regions)} regions ({args.out})")
    return 0


def cmd_eval(args) -> int:
    tasks = io.load_tasks(args.tasks)
    scene = io.load_scene_graph(args.scene_graph)
    gts = io.load_ground_truth(args.ground_truth)
    report = evaluate(scene.objects, gts, tasks)
    io.write_metrics(args.out, report, scene.provenance)
    for warning in report.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    print(f"{'':10s} {'osR':>8s} {'osP':>8s} {'F1':>8s}")
    for name, block in (("strict", report.strict), ("relaxed", report.relaxed)):
        print(f"{name:10s} {block.recall:8.4f} {block.precision:8.4f} {block.f1:8.4f}")
        for tm in block.per_task:
            label = tasks.labels[tm.task_index]
            print(f"  task {tm.task_index} ({label[:28]}): "
                  f"osR {tm.recall:.4f} osP {tm.precision:.4f} f1 {tm.f1:.4f} "
                  f"[{tm.gt_count} gt]")
    print(f"mean IoU  {report.mean_iou:8.4f}")
    print(f"objects   {report.object_count:8d}")
    print(f"report written to {args.out}")
    return 0


def cmd_query(args) -> int:
    scene = io.load_scene_graph(args.scene_graph)
    dim = scene.objects[0].embedding.shape[0] if scene.objects else None
    embedding = io.load_query(args.query, dim=dim)
    from .core import unit_vector

    ranked = query_objects(scene, unit_vector(embedding), args.n) if scene.objects else []
    index_of = {id(c): i for i, c in enumerate(scene.objects)}
    results = [
        {"rank": r, "id": index_of[id(cluster)], "score": score,
         "members": sorted(cluster.members)}
        for r, (cluster, score) in enumerate(ranked)
    ]
    for row in results:
        print(f"#{row['rank']}: object {row['id']} score {row['score']:.4f}")
    if args.out:
        io.write_query_results(args.out, results, scene.provenance)
    return 0


_VALIDATORS = {
    "primitives": io.load_primitives,
    "observations": io.load_observations,
    "tasks": io.load_tasks,
    "places": io.load_places,
    "images": io.load_images,
    "ground-truth": io.load_ground_truth,
    "scene-graph": io.load_scene_graph,
}


def cmd_validate(args) -> int:
    loaded = _VALIDATORS[args.kind](args.file)
    count = len(loaded.labels) if args.kind == "tasks" else (
        len(loaded.objects) if args.kind == "scene-graph" else len(loaded)
    )
    print(f"OK: {args.file} ({count} {args.kind} records)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="taskscene",
        description="Task-driven clustering of embedded 3D primitives",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cluster", help="batch-cluster a primitives file")
    p.add_argument("--primitives", required=True)
    p.add_argument("--tasks", required=True)
    p.add_argument("--out", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("stream", help="track and cluster an observation stream")
    p.add_argument("--observations", required=True)
    p.add_argument("--tasks", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--latency-log", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_stream)

    p = sub.add_parser("regions", help="cluster a place graph into regions")
    p.add_argument("--places", required=True)
    p.add_argument("--images", required=True)
    p.add_argument("--tasks", required=True)
    p.add_argument("--out", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_regions)

    p = sub.add_parser("eval", help="score a scene graph against ground truth")
    p.add_argument("--scene-graph", required=True)
    p.add_argument("--ground-truth", required=True)
    p.add_argument("--tasks", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("query", help="rank scene objects against a query embedding")
    p.add_argument("--scene-graph", required=True)
    p.add_argument("--query", required=True)
    p.add_argument("-n", type=int, default=1)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("validate", help="check a file against its schema")
    p.add_argument("--kind", required=True, choices=sorted(_VALIDATORS))
    p.add_argument("file")
    p.set_defaults(func=cmd_validate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except TaskSceneError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
