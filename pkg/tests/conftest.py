import numpy as np
import pytest

from layerflow.mesh import Triangulation, build_dual
from layerflow import casegen


@pytest.fixture(scope="session")
def single_triangle():
    tri = Triangulation(
        xy=np.array([[0.0, 0.0], [1.0, 0.0], [0.5, np.sqrt(3.0) / 2.0]]),
        zb=np.zeros(3),
        triangles=np.array([[0, 1, 2]]),
        boundary_edges=np.array([[0, 1], [1, 2], [2, 0]]),
        boundary_tags=["wall", "wall", "wall"],
    )
    return build_dual(tri)


@pytest.fixture(scope="session")
def small_mesh():
    """Jittered unit square, ~120 nodes, flat bed."""
    return build_dual(casegen.rectangle_mesh(0.0, 1.0, 0.0, 1.0, 11, 11, jitter=0.25, seed=7))


@pytest.fixture(scope="session")
def bumpy_mesh():
    """~500 node square with random topography incl. dry hilltops at eta=1."""
    return build_dual(casegen.random_topography_mesh(500))
