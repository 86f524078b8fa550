"""Maximal-ball skeletons of watertight triangle meshes.

Inner points are drawn in the bounding box and kept by ray-parity occupancy.
Their unsigned distance to the surface is dilated over a k-nearest-neighbour
graph; the residual ``dilated - udf`` vanishes at local maxima, and the ``n``
smallest residuals give the skeletal spheres.
"""
from ._backend import NAME as BACKEND
from .distance import attach_udf, sdf, sdf_batch, udf_batch
from .errors import *  # noqa: F401,F403
from .lfs import SamplingPrior, local_feature_size, prior_weights, weighted_sample
from .mesh import (
    Aabb,
    TriangleMesh,
    WatertightReport,
    bounding_box,
    is_watertight,
    load_mesh,
    load_points,
    save_mesh,
    validate_mesh,
    write_ply,
)
from .metrics import chamfer, directed_distances, hausdorff
from .morphology import (
    SkeletalSphere,
    Skeleton,
    dilate,
    dilation_residual,
    exact_maxima_count,
    maximal_ball_oracle,
    select_skeleton,
)
from .occupancy import (
    GridFrame,
    VolumeSamples,
    lattice_points,
    occupancy,
    occupancy_batch,
    sample_inner_points_grid,
    sample_inner_points_random,
)
from .pipeline import PipelineConfig, SkeletonRun, run_skeleton
from .spatial import (
    KnnGraph,
    PointKdTree,
    TriangleBvh,
    build_bvh,
    build_knn_graph,
    closest_distance,
    closest_distance_batch,
    count_ray_crossings,
    count_ray_crossings_batch,
)

__version__ = "0.1.0"
