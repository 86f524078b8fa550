import numpy as np
import pytest

from maxball.errors import EmptySet
from maxball.metrics import chamfer, directed_distances, hausdorff


def brute(a, b):
    d = np.sqrt(((a[:, None, :] - b[None, :, :]) ** 2).sum(-1))
    ab, ba = d.min(axis=1), d.min(axis=0)
    return ab.mean() + ba.mean(), max(ab.max(), ba.max())


def test_single_points_one_apart():
    a, b = [[0.0, 0.0, 0.0]], [[1.0, 0.0, 0.0]]
    assert chamfer(a, b) == 2.0
    assert hausdorff(a, b) == 1.0


def test_matches_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(20):
        a, b = rng.normal(size=(rng.integers(1, 60), 3)), rng.normal(size=(rng.integers(1, 60), 3))
        cd, hd = brute(a, b)
        assert abs(chamfer(a, b) - cd) <= 1e-12
        assert abs(hausdorff(a, b) - hd) <= 1e-12


def test_symmetric_and_zero_on_identity():
    rng = np.random.default_rng(1)
    a, b = rng.random((30, 3)), rng.random((40, 3))
    assert chamfer(a, b) == chamfer(b, a)
    assert hausdorff(a, b) == hausdorff(b, a)
    assert chamfer(a, a) == 0.0 and hausdorff(a, a) == 0.0


def test_directed_is_asymmetric():
    a = [[0.0, 0.0, 0.0]]
    b = [[0.0, 0.0, 0.0], [5.0, 0.0, 0.0]]
    assert directed_distances(a, b).tolist() == [0.0]
    assert directed_distances(b, a).tolist() == [0.0, 5.0]


def test_empty_sets():
    with pytest.raises(EmptySet):
        chamfer(np.zeros((0, 3)), np.zeros((1, 3)))
    with pytest.raises(EmptySet):
        hausdorff(np.zeros((1, 3)), [])
