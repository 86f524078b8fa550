"""Command line entry point: ``maxball skeletonize | sample | eval | bench``.

Settings come from flags, then ``--config`` JSON, then defaults.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from . import pipeline
from .errors import (
    EmptySet,
    EmptySkeleton,
    InvalidConfig,
    MaxballError,
    NoInnerPoints,
    NotWatertight,
    ParseError,
    SubsetTooLarge,
    TooFewPoints,
    UnsupportedResolution,
)
from .lfs import weighted_sample
from .metrics import chamfer, hausdorff
from .mesh import load_points, write_ply
from .morphology import Skeleton
from .pipeline import PipelineConfig
from .shapes import analytic_skeleton_error

EXIT_CODES = [
    (ParseError, 2),
    (NotWatertight, 3),
    (NoInnerPoints, 4),
    (InvalidConfig, 5),
    (SubsetTooLarge, 5),
    (TooFewPoints, 5),
    (UnsupportedResolution, 5),
    (EmptySkeleton, 6),
    (EmptySet, 6),
]

_CONFIG_FLAGS = ("input", "shape", "box", "grid", "k", "n", "m", "seed", "sharpness", "threads", "out", "emit")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # usage errors are configuration errors
        self.print_usage(sys.stderr)
        self.exit(5, f"{self.prog}: error: {message}\n")


def _run_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    src = p.add_mutually_exclusive_group()
    src.add_argument("--input", help="watertight mesh (PLY or OBJ)")
    src.add_argument("--shape", help="analytic shape, e.g. sphere:r=1,subdiv=4 or torus:R=1,r=0.3,res=200x50")
    p.add_argument("--box", type=int, help="uniform box draws (default 10000000)")
    p.add_argument("--grid", type=int, help="use a cell-centred lattice of this resolution instead of box draws")
    p.add_argument("--k", type=int, help="neighbours in the structuring element (default 20)")
    p.add_argument("--n", type=int, help="skeletal spheres to keep (default 1024)")
    p.add_argument("--seed", type=int, help="random seed (default 0)")
    p.add_argument("--threads", type=int, help="worker threads (default: all cores)")
    p.add_argument("--out", help="output directory (default ./out)")
    p.add_argument("--config", help="JSON file with any of the settings above")
    p.add_argument("--emit", help=f"comma list from {','.join(pipeline.EMITS)} or 'all'")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="maxball", description="Maximal-ball skeletons of watertight meshes.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    flags = _run_flags()

    sub.add_parser("skeletonize", parents=[flags], help="compute a skeleton and write its artifacts")

    s = sub.add_parser("sample", parents=[flags], help="LFS sampling prior and a weighted surface subset")
    s.add_argument("--m", type=int, help="surface points to draw (default 1024)")
    s.add_argument("--sharpness", type=float, help="prior exponent (default 1.0)")
    s.add_argument("--surface", help="PLY point cloud to sample from (default: mesh vertices)")
    s.add_argument("--skeleton", help="reuse a skeleton PLY instead of computing one")

    e = sub.add_parser("eval", help="chamfer and hausdorff between two point sets")
    e.add_argument("pred")
    e.add_argument("target")
    e.add_argument("--threads", type=int, default=1)
    e.add_argument("--out", help="directory for metrics.json")

    b = sub.add_parser("bench", parents=[flags], help="per-stage timing statistics over repetitions")
    b.add_argument("--reps", type=int, default=3, help="repetitions (default 3)")
    return parser


def resolve_config(args: argparse.Namespace, emit_default=None) -> PipelineConfig:
    data = {}
    if getattr(args, "config", None):
        data.update(pipeline.load_config_file(args.config))
    for name in _CONFIG_FLAGS:
        value = getattr(args, name, None)
        if value is not None:
            data[name] = value
    # a flag source overrides whichever source the file named
    if getattr(args, "input", None) is not None:
        data.pop("shape", None)
    if getattr(args, "shape", None) is not None:
        data.pop("input", None)
    if emit_default is not None and "emit" not in data:
        data["emit"] = emit_default
    try:
        config = PipelineConfig.from_dict(data)
    except TypeError as exc:
        raise InvalidConfig(str(exc)) from None
    return config.validate()


def _emit_skeleton(run, config: PipelineConfig):
    out = config.out
    os.makedirs(out, exist_ok=True)
    if "skeleton_ply" in config.emit:
        pipeline.write_skeleton_ply(os.path.join(out, "skeleton.ply"), run.skeleton)
    if "residual_histogram_csv" in config.emit:
        pipeline.write_histogram_csv(os.path.join(out, "residual_histogram.csv"), run.skeleton.residuals)
    if "timings_csv" in config.emit:
        pipeline.write_timings_csv(os.path.join(out, "timings.csv"), run.timings)
    if "metrics_json" in config.emit and run.shape is not None:
        try:
            err = analytic_skeleton_error(run.shape, run.skeleton)
        except NotImplementedError:
            err = None
        if err is not None:
            pipeline.write_json(os.path.join(out, "metrics.json"), {"analytic_skeleton_error": err})
    pipeline.write_json(os.path.join(out, "metadata.json"), pipeline.run_metadata(run))


def cmd_skeletonize(args) -> int:
    config = resolve_config(args)
    run = pipeline.run_skeleton(config)
    _emit_skeleton(run, config)
    c = run.counts
    print(f"{c['skeleton']} spheres from {c['inner']} inner points ({c['drawn']} drawn); "
          f"{c['zero_residual']} exact maxima -> {config.out}")
    return 0


def _skeleton_from_ply(path) -> Skeleton:
    pts, extras = load_points(path)
    if len(pts) == 0:
        raise EmptySkeleton(f"{path} holds no spheres")
    zeros = pts[:, 0] * 0.0
    return Skeleton(pts, extras.get("radius", zeros), extras.get("residual", zeros),
                    source_index=zeros.astype(int))


def cmd_sample(args) -> int:
    config = resolve_config(args, emit_default=("lfs_heatmap_ply",))
    mesh, shape = pipeline.resolve_input(config)
    if args.skeleton:
        skeleton = _skeleton_from_ply(args.skeleton)
        run = None
    else:
        run = pipeline.run_skeleton(config, mesh=mesh)
        run.shape = shape
        skeleton = run.skeleton
    surface = pipeline.load_surface(args.surface) if args.surface else mesh.vertices
    prior = pipeline.surface_prior(surface, skeleton, config.sharpness, threads=config.threads)
    pick = weighted_sample(surface, prior, config.m, config.seed)

    os.makedirs(config.out, exist_ok=True)
    if run is not None:
        _emit_skeleton(run, config)
    if "lfs_heatmap_ply" in config.emit:
        write_ply(os.path.join(config.out, "lfs_heatmap.ply"), surface,
                  properties={"lfs": prior.lfs, "weight": prior.weight})
    write_ply(os.path.join(config.out, "sampled.ply"), surface[pick],
              properties={"lfs": prior.lfs[pick], "weight": prior.weight[pick]})
    print(f"sampled {len(pick)} of {len(surface)} surface points -> {config.out}")
    return 0


def cmd_eval(args) -> int:
    pred, _ = load_points(args.pred)
    target, _ = load_points(args.target)
    result = {
        "chamfer": chamfer(pred, target, threads=args.threads),
        "hausdorff": hausdorff(pred, target, threads=args.threads),
    }
    print(json.dumps(result, sort_keys=True))
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        pipeline.write_json(os.path.join(args.out, "metrics.json"), result)
    return 0


def cmd_bench(args) -> int:
    if args.reps < 1:
        raise InvalidConfig("reps must be at least 1")
    config = resolve_config(args)
    all_timings = []
    for rep in range(args.reps):
        run = pipeline.run_skeleton(config)
        all_timings.append(run.timings)
        print(f"rep {rep + 1}/{args.reps}: {sum(run.timings.values()):.3f} s", file=sys.stderr)
    os.makedirs(config.out, exist_ok=True)
    path = os.path.join(config.out, "bench.csv")
    pipeline.write_bench_csv(path, all_timings, config.threads, args.reps)
    for stage, lo, med, hi in pipeline.bench_stats(all_timings):
        print(f"{stage:10s} min {lo:8.3f}  median {med:8.3f}  max {hi:8.3f}")
    return 0


COMMANDS = {"skeletonize": cmd_skeletonize, "sample": cmd_sample, "eval": cmd_eval, "bench": cmd_bench}


def exit_code(exc: BaseException) -> int:
    for cls, code in EXIT_CODES:
        if isinstance(exc, cls):
            return code
    return 1


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # --help or a usage error
        return exc.code if isinstance(exc.code, int) else 0
    try:
        return COMMANDS[args.command](args)
    except MaxballError as exc:
        print(f"maxball: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
