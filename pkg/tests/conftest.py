from __future__ import annotations
import tempfile
import shutil
import textwrap
from os import path

import pytest

from loop_bie.mesh import (
    icosahedron,
    limit_sphere,
    loop_subdivide,
    tetrahedron
)
from loop_bie.surface import (
    LimitSurface,
    SurfaceQuadrature
)

ASSETS = path.join(path.dirname(path.dirname(path.abspath(__file__))), "assets")


@pytest.fixture
def make_dir():
    temp_dirs = []

    def _make_dir():
        temp_dir = tempfile.mkdtemp()
        temp_dirs.append(temp_dir)
        return temp_dir

    yield _make_dir

    for temp_dir in temp_dirs:
        shutil.rmtree(temp_dir, ignore_errors=True)


@pytest.fixture
def dir(make_dir):
    return make_dir()


@pytest.fixture
def make_run_file(dir):
    """Writes a run file (dedented) into the temporary directory and returns its path."""

    def _make_run_file(content: str, name: str = "run.toml"):
        file = path.join(dir, name)
        with open(file, "w") as stream:
            stream.write(textwrap.dedent(content).lstrip())
        return file

    return _make_run_file


@pytest.fixture
def bumpy_cube_file():
    return path.join(ASSETS, "bumpy_cube.obj")


@pytest.fixture
def tetra():
    return tetrahedron()


@pytest.fixture
def ico():
    return icosahedron()


@pytest.fixture(scope="session")
def ico_refined():
    """Icosahedron after one Loop step: every face has at most one extraordinary corner."""
    return loop_subdivide(icosahedron())


@pytest.fixture(scope="session")
def sphere_surface():
    return LimitSurface(limit_sphere(1))


@pytest.fixture(scope="session")
def sphere_quadrature(sphere_surface):
    return SurfaceQuadrature(sphere_surface, depth=1, base_rule=6)
