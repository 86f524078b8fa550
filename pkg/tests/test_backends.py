"""The compiled kernels and the numpy fallback must agree bit for bit."""
import numpy as np
import pytest

from maxball import _backend
from maxball.distance import udf_batch
from maxball.morphology import dilate
from maxball.occupancy import occupancy_batch
from maxball.pipeline import PipelineConfig, run_skeleton
from maxball.shapes import Torus, box_mesh
from maxball.spatial import build_bvh, build_knn_graph

pytestmark = pytest.mark.skipif(len(_backend.BACKENDS) < 2, reason="compiled kernels not built")


def test_occupancy_agrees_including_retries():
    mesh = box_mesh((2.0, 2.0, 2.0))
    bvh = build_bvh(mesh)
    # lattice points line up with face diagonals, forcing retries; none lie on the surface
    r = np.array([-1.5, -1.25, -0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 0.75, 1.25, 1.5])
    p = np.stack(np.meshgrid(r, r, r, indexing="ij"), -1).reshape(-1, 3)
    a = occupancy_batch(bvh, p, backend="native")
    b = occupancy_batch(bvh, p, backend="python")
    np.testing.assert_array_equal(a, b)
    assert (a == (np.abs(p).max(axis=1) < 1)).all()


def test_torus_fields_agree():
    mesh = Torus(n_major=48, n_minor=16).mesh()
    bvh = build_bvh(mesh)
    p = np.random.default_rng(5).uniform(-1.4, 1.4, size=(4000, 3)) * [1, 1, 0.3]
    np.testing.assert_array_equal(occupancy_batch(bvh, p, backend="native"),
                                  occupancy_batch(bvh, p, backend="python"))
    np.testing.assert_array_equal(udf_batch(bvh, p, backend="native"), udf_batch(bvh, p, backend="python"))


def test_dilate_agrees():
    rng = np.random.default_rng(0)
    g = build_knn_graph(rng.random((2000, 3)), 12)
    f = rng.random(2000)
    np.testing.assert_array_equal(dilate(f, g, backend="native"), dilate(f, g, backend="python"))


def test_whole_pipeline_agrees():
    cfg = PipelineConfig(shape="torus:R=1,r=0.3,res=40x16", box=20000, k=10, n=100, threads=1)
    a = run_skeleton(cfg, backend="native")
    b = run_skeleton(cfg, backend="python")
    np.testing.assert_array_equal(a.samples.points, b.samples.points)
    np.testing.assert_array_equal(a.residuals, b.residuals)
    np.testing.assert_array_equal(a.skeleton.source_index, b.skeleton.source_index)


def test_unknown_backend():
    with pytest.raises(ValueError):
        _backend.get("fortran")
