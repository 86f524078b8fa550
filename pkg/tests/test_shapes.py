import math

import numpy as np
import pytest

from maxball.errors import EmptySkeleton, InvalidConfig, UnsupportedResolution
from maxball.mesh import is_watertight
from maxball.shapes import (
    Box,
    Capsule,
    FinnedCylinder,
    Sphere,
    Torus,
    analytic_skeleton_error,
    generate_mesh,
    icosphere,
    parse_shape,
    sampled_deviation,
)

SHAPES = [Sphere(subdiv=3), Box(), Torus(n_major=60, n_minor=20), Capsule(n_around=32, n_cap=8),
          FinnedCylinder(n_around=48, n_layers=6, n_fin=6)]


@pytest.mark.parametrize("shape", SHAPES, ids=lambda s: s.kind)
def test_meshes_are_closed_and_outward(shape):
    mesh = shape.mesh()
    assert is_watertight(mesh).closed
    assert mesh.volume() > 0


def test_icosphere_counts():
    for s in range(5):
        mesh = icosphere(s)
        assert mesh.n_triangles == 20 * 4 ** s
        assert mesh.n_vertices == 10 * 4 ** s + 2
        np.testing.assert_allclose(np.linalg.norm(mesh.vertices, axis=1), 1.0, atol=1e-15)


def test_torus_counts_and_volume():
    mesh = Torus().mesh()
    assert mesh.n_triangles == 2 * 200 * 50
    assert mesh.volume() == pytest.approx(2 * math.pi ** 2 * 0.09, rel=4e-3)  # inscribed polygons lose a little area


@pytest.mark.parametrize("shape", [Sphere(subdiv=3), Torus(n_major=60, n_minor=20), Capsule(n_around=32, n_cap=8)],
                         ids=lambda s: s.kind)
def test_tessellation_within_deviation_bound(shape):
    assert sampled_deviation(shape, shape.mesh()) <= shape.deviation_bound() + 1e-12


def test_box_medial_distances():
    box = Box(2.0, 1.0, 1.0)
    assert box.skeleton_distance([0.0, 0.0, 0.0])[0] == 0.0
    assert box.skeleton_distance([0.5, 0.0, 0.0])[0] == pytest.approx(0.0, abs=1e-15)
    assert box.skeleton_distance([0.9, 0.0, 0.0])[0] == pytest.approx(0.4 / math.sqrt(2), abs=1e-12)
    assert box.skeleton_distance([0.3, 0.1, 0.0])[0] == pytest.approx(0.1 / math.sqrt(2), abs=1e-12)
    # a bisector point x - y = 0.5 with z small
    assert box.skeleton_distance([0.8, 0.3, 0.1])[0] == pytest.approx(0.0, abs=1e-12)


def test_box_medial_is_where_nearest_face_is_not_unique():
    box = Box(2.0, 1.0, 1.0)
    rng = np.random.default_rng(0)
    p = rng.uniform(-1, 1, size=(4000, 3)) * box.half
    gaps = np.sort(box.half - np.abs(p), axis=1)
    d = box.skeleton_distance(p)
    # moving onto the bisector of the two nearest faces costs (g1 - g0) / sqrt(2)
    assert np.all(d <= (gaps[:, 1] - gaps[:, 0]) / math.sqrt(2) + 1e-12)
    assert np.all(d[gaps[:, 1] - gaps[:, 0] < 1e-3] < 1e-3)


def test_torus_and_sphere_skeleton_distances():
    assert Torus().skeleton_distance([[1.0, 0.0, 0.0], [0.0, 1.2, 0.1]]).tolist() == pytest.approx(
        [0.0, math.hypot(0.2, 0.1)])
    assert Sphere().skeleton_distance([0.0, 0.3, 0.4])[0] == pytest.approx(0.5)
    assert Capsule(h=1.0).skeleton_distance([[0.0, 0.0, 0.9], [0.2, 0.0, 0.1]]).tolist() == pytest.approx(
        [0.4, 0.2])


def test_analytic_error():
    err = analytic_skeleton_error(Sphere(), np.array([[0.0, 0.0, 0.1], [0.0, 0.3, 0.0]]))
    assert err == {"mean": pytest.approx(0.2), "max": pytest.approx(0.3)}
    with pytest.raises(EmptySkeleton):
        analytic_skeleton_error(Sphere(), np.zeros((0, 3)))


def test_parse_shape():
    t = parse_shape("torus:R=1,r=0.3,res=200x50")
    assert (t.R, t.r, t.n_major, t.n_minor) == (1.0, 0.3, 200, 50)
    s = parse_shape("sphere:r=1,subdiv=4")
    assert (s.r, s.subdiv) == (1.0, 4)
    assert parse_shape("box").a == 2.0
    assert parse_shape(s.spec()).subdiv == 4
    for bad in ("cone:r=1", "sphere:radius=1", "sphere:r=x", "torus:res=3", "sphere:r"):
        with pytest.raises(InvalidConfig):
            parse_shape(bad)


def test_resolution_limits():
    with pytest.raises(UnsupportedResolution):
        Sphere(subdiv=9)
    with pytest.raises(UnsupportedResolution):
        FinnedCylinder(fin_thickness=2.0)
    assert generate_mesh(Sphere(), 2).n_triangles == 320


def test_finned_regions():
    shape = FinnedCylinder()
    mesh = shape.mesh()
    labels = shape.region_labels(mesh.vertices)
    assert set(labels) == {"fin", "barrel", "cap"}
    fin = mesh.vertices[labels == "fin"]
    assert np.all(fin[:, 0] > shape.r * 0.99)
    assert np.all(np.abs(fin[:, 1]) <= shape.fin_thickness / 2 + 1e-12)
    assert mesh.volume() == pytest.approx(
        math.pi * shape.r ** 2 * shape.h * (1 - 0.001) + 0.6 * 0.08 * shape.h, rel=3e-3)
