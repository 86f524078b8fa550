"""End-to-end skeleton runs with per-stage timings, plus the result writers."""
from __future__ import annotations

import csv
import io
import json
import os
import platform
import time
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import _backend
from .distance import attach_udf
from .errors import InvalidConfig, NotWatertight
from .lfs import SamplingPrior, local_feature_size, prior_weights, weighted_sample
from .mesh import TriangleMesh, is_watertight, load_mesh, load_points, write_ply
from .morphology import Skeleton, dilate, dilation_residual, exact_maxima_count, select_skeleton
from .occupancy import GridFrame, VolumeSamples, sample_inner_points_grid, sample_inner_points_random
from .shapes import AnalyticShape, parse_shape
from .spatial import KnnGraph, build_bvh, build_knn_graph

STAGES = ("sampling", "occupancy", "udf", "knn", "dilation", "selection")
EMITS = ("skeleton_ply", "residual_histogram_csv", "lfs_heatmap_ply", "metrics_json", "timings_csv")
HISTOGRAM_BINS = 64

_INT_FIELDS = ("box", "grid", "k", "n", "m", "seed", "threads")


@dataclass
class PipelineConfig:
    """Every knob of a run. ``grid`` switches from random box draws to a lattice."""

    input: str | None = None
    shape: str | None = None
    box: int = 10_000_000
    grid: int | None = None
    k: int = 20
    n: int = 1024
    m: int = 1024
    seed: int = 0
    sharpness: float = 1.0
    threads: int = field(default_factory=_backend.default_threads)
    out: str = "out"
    emit: tuple = ("skeleton_ply", "residual_histogram_csv", "timings_csv")

    def __post_init__(self):
        self.emit = parse_emit(self.emit)

    def validate(self) -> "PipelineConfig":
        if (self.input is None) == (self.shape is None):
            raise InvalidConfig("give exactly one of input and shape")
        for name in _INT_FIELDS:
            v = getattr(self, name)
            if v is not None and (isinstance(v, bool) or not isinstance(v, (int, np.integer))):
                raise InvalidConfig(f"{name} must be an integer, got {v!r}")
        if self.k < 1:
            raise InvalidConfig("k must be at least 1")
        if self.n < 1:
            raise InvalidConfig("n must be at least 1")
        if self.m < 1:
            raise InvalidConfig("m must be at least 1")
        if self.threads < 1:
            raise InvalidConfig("threads must be at least 1")
        if self.seed < 0:
            raise InvalidConfig("seed must be non-negative")
        if not isinstance(self.sharpness, (int, float)) or not self.sharpness > 0:
            raise InvalidConfig("sharpness must be positive")
        if self.grid is not None:
            if self.grid < 2:
                raise InvalidConfig("grid resolution must be at least 2")
            if self.grid ** 3 < self.n:
                raise InvalidConfig(f"n={self.n} exceeds the {self.grid}^3 lattice size")
        elif self.box < self.n:
            raise InvalidConfig(f"n={self.n} exceeds box={self.box}; at most box points can be inside")
        return self

    def as_dict(self) -> dict:
        d = asdict(self)
        d["emit"] = list(self.emit)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise InvalidConfig(f"unknown config keys: {', '.join(unknown)}")
        return cls(**data)


def parse_emit(emit) -> tuple:
    if isinstance(emit, str):
        emit = [s.strip() for s in emit.split(",") if s.strip()]
    emit = list(emit)
    if emit == ["all"]:
        return EMITS
    bad = [e for e in emit if e not in EMITS]
    if bad:
        raise InvalidConfig(f"unknown emit entries {bad}; choose from {list(EMITS)} or 'all'")
    return tuple(e for e in EMITS if e in emit)


def load_config_file(path) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidConfig(f"cannot read config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise InvalidConfig("config file must hold a JSON object")
    return data


def resolve_input(config: PipelineConfig) -> tuple[TriangleMesh, AnalyticShape | None]:
    if config.shape is not None:
        shape = parse_shape(config.shape)
        return shape.mesh(), shape
    return load_mesh(config.input), None


def require_watertight(mesh: TriangleMesh):
    report = is_watertight(mesh)
    if not report.closed:
        raise NotWatertight(
            f"mesh is not watertight: {report.boundary_edge_count} boundary edges, "
            f"{report.non_manifold_edge_count} non-manifold edges, "
            f"{report.inconsistent_edge_count} inconsistently oriented edges",
            report,
        )
    return report


@dataclass(eq=False)
class SkeletonRun:
    config: PipelineConfig
    mesh: TriangleMesh
    shape: AnalyticShape | None
    samples: VolumeSamples
    graph: KnnGraph
    residuals: np.ndarray
    skeleton: Skeleton
    timings: dict

    @property
    def counts(self) -> dict:
        return {
            "triangles": int(self.mesh.n_triangles),
            "dropped_triangles": int(self.mesh.dropped),
            "drawn": int(self.samples.drawn),
            "inner": int(len(self.samples)),
            "kept_fraction": float(self.samples.kept_fraction),
            "zero_residual": exact_maxima_count(self.residuals),
            "skeleton": int(len(self.skeleton)),
        }


def run_skeleton(config: PipelineConfig, *, mesh: TriangleMesh | None = None,
                 frame: GridFrame | None = None, backend: str | None = None) -> SkeletonRun:
    """Inner points, distance field, k-NN dilation, residual and selection.

    ``mesh`` overrides the configured input; ``frame`` places the lattice of
    the grid variant (defaults to the axis-aligned bounding box).
    """
    shape = None
    if mesh is None:
        config.validate()
        mesh, shape = resolve_input(config)
    require_watertight(mesh)
    threads = config.threads
    timings = dict.fromkeys(STAGES, 0.0)

    t0 = time.perf_counter()
    bvh = build_bvh(mesh)
    timings["occupancy"] += time.perf_counter() - t0
    if config.grid is not None:
        samples = sample_inner_points_grid(mesh, bvh, config.grid, frame=frame, seed=config.seed,
                                           threads=threads, backend=backend, timings=timings)
    else:
        samples = sample_inner_points_random(mesh, bvh, config.box, config.seed,
                                             threads=threads, backend=backend, timings=timings)

    t0 = time.perf_counter()
    samples = attach_udf(bvh, samples, threads=threads, backend=backend)
    timings["udf"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    graph = build_knn_graph(samples.points, config.k, lattice=samples.lattice, threads=threads)
    timings["knn"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    dilated = dilate(samples.udf, graph, threads=threads, backend=backend)
    residuals = dilation_residual(samples.udf, dilated)
    timings["dilation"] = time.perf_counter() - t0
    del dilated

    t0 = time.perf_counter()
    skeleton = select_skeleton(samples, residuals, config.n, parameters={"k": config.k, "n": config.n})
    timings["selection"] = time.perf_counter() - t0

    return SkeletonRun(config, mesh, shape, samples, graph, residuals, skeleton, timings)


def surface_prior(surface_points, skeleton: Skeleton, sharpness: float = 1.0, *, threads: int = 1) -> SamplingPrior:
    return prior_weights(local_feature_size(surface_points, skeleton, threads=threads), sharpness)


def load_surface(path) -> np.ndarray:
    points, _ = load_points(path)
    return points


# -- writers ---------------------------------------------------------------

def _fmt(x) -> str:
    return repr(float(x))


def residual_histogram(residuals, bins: int = HISTOGRAM_BINS) -> tuple[np.ndarray, np.ndarray]:
    """Counts over ``bins`` equal bins spanning ``[0, max residual]``; the top edge is closed.

    Returns ``(edges, counts)``. With all residuals zero every value lands in
    the first bin.
    """
    r = np.asarray(residuals, dtype=np.float64)
    top = float(r.max()) if r.size else 0.0
    edges = top * (np.arange(bins + 1) / bins)
    if top > 0:
        idx = np.minimum((r / top * bins).astype(np.int64), bins - 1)
    else:
        idx = np.zeros(r.size, dtype=np.int64)
    return edges, np.bincount(idx, minlength=bins)


def _write_csv(path, header, rows, comments=()):
    buf = io.StringIO()
    for line in comments:
        buf.write(f"# {line}\r\n")
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    w.writerows(rows)
    with open(path, "w", newline="") as fh:
        fh.write(buf.getvalue())


def write_histogram_csv(path, residuals, bins: int = HISTOGRAM_BINS):
    edges, counts = residual_histogram(residuals, bins)
    rows = [(i, _fmt(edges[i]), _fmt(edges[i + 1]), int(counts[i])) for i in range(bins)]
    _write_csv(path, ("bin", "lower", "upper", "count"), rows)


def write_timings_csv(path, timings: dict):
    _write_csv(path, ("stage", "seconds"), [(s, _fmt(timings.get(s, 0.0))) for s in STAGES])


def write_skeleton_ply(path, skeleton: Skeleton):
    write_ply(path, skeleton.centers, properties={"radius": skeleton.radii, "residual": skeleton.residuals})


def write_json(path, data):
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def run_metadata(run: SkeletonRun) -> dict:
    return {
        "config": run.config.as_dict(),
        "backend": _backend.NAME,
        "counts": run.counts,
        "timings": {s: run.timings[s] for s in STAGES},
        "total_seconds": float(sum(run.timings.values())),
        "sample_source": run.samples.source,
    }


def machine_info(threads: int) -> list[str]:
    return [
        f"platform={platform.platform()}",
        f"machine={platform.machine()}",
        f"processor={platform.processor() or 'unknown'}",
        f"cpu_count={os.cpu_count()}",
        f"python={platform.python_version()}",
        f"numpy={np.__version__}",
        f"backend={_backend.NAME}",
        f"threads={threads}",
    ]


def bench_stats(all_timings: list[dict]) -> list[tuple]:
    rows = []
    for s in STAGES:
        v = np.array([t[s] for t in all_timings])
        rows.append((s, float(v.min()), float(np.median(v)), float(v.max())))
    return rows


def write_bench_csv(path, all_timings: list[dict], threads: int, reps: int):
    comments = machine_info(threads) + [f"repetitions={reps}"]
    rows = [(s, _fmt(a), _fmt(b), _fmt(c)) for s, a, b, c in bench_stats(all_timings)]
    _write_csv(path, ("stage", "min", "median", "max"), rows, comments)
