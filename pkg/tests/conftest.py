import numpy as np
import pytest

from maxball import _backend
from maxball.shapes import box_mesh, icosphere

BACKENDS = sorted(_backend.BACKENDS)


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


@pytest.fixture
def cube():
    """Cube [-1, 1]^3, 12 outward-wound triangles."""
    return box_mesh((2.0, 2.0, 2.0))


@pytest.fixture
def unit_cube():
    return box_mesh((1.0, 1.0, 1.0), center=(0.5, 0.5, 0.5))


@pytest.fixture(scope="session")
def sphere3():
    return icosphere(3)


def random_rotation(rng):
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


_ACCEPTANCE = {}


@pytest.fixture
def record_criterion():
    """Store and print the one-line verdict of an acceptance criterion."""
    def record(name, passed, detail):
        line = f"{name} {'PASS' if passed else 'FAIL'}: {detail}"
        _ACCEPTANCE[name] = line
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE, key=lambda s: int(s[1:])):
        terminalreporter.write_line(_ACCEPTANCE[name])
